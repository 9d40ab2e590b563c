from django.db import models
from django.utils import timezone


class SimulationRun(models.Model):
    """每次 run 指令的執行紀錄"""

    STATUS_CHOICES = [
        ('PENDING', '等待中'),
        ('RUNNING', '執行中'),
        ('COMPLETED', '已完成'),
        ('FAILED', '失敗'),
    ]

    CORRECTION_CHOICES = [
        ('rkgc', 'RKGC'),
        ('none', '不修正'),
    ]

    case_name = models.CharField(max_length=100, verbose_name='案例名稱')
    layout = models.CharField(max_length=50, verbose_name='幾何配置')
    resolution = models.PositiveIntegerField(verbose_name='解析度', help_text='結構厚度 / dp^S')
    correction = models.CharField(max_length=10, choices=CORRECTION_CHOICES, default='rkgc', verbose_name='核梯度修正')
    transport_velocity = models.BooleanField(default=False, verbose_name='傳輸速度修正')
    output_dir = models.CharField(max_length=500, verbose_name='輸出目錄')
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default='PENDING', verbose_name='執行狀態')
    created_at = models.DateTimeField(auto_now_add=True, verbose_name='建立時間')
    started_at = models.DateTimeField(null=True, blank=True, verbose_name='開始時間')
    finished_at = models.DateTimeField(null=True, blank=True, verbose_name='結束時間')
    end_time = models.FloatField(verbose_name='模擬結束時間 (s)')
    simulated_time = models.FloatField(default=0.0, verbose_name='已模擬時間 (s)')
    advection_steps = models.PositiveIntegerField(default=0, verbose_name='advection 步數')
    acoustic_steps = models.PositiveIntegerField(default=0, verbose_name='acoustic 步數')
    counters = models.JSONField(default=dict, blank=True, verbose_name='退化情況計數')
    wall_seconds = models.FloatField(default=0.0, verbose_name='執行時間 (s)')
    message = models.TextField(blank=True, verbose_name='錯誤訊息', help_text='執行中止時的原因')

    class Meta:
        verbose_name = '模擬執行紀錄'
        verbose_name_plural = '模擬執行紀錄'
        ordering = ['-created_at']

    def __str__(self):
        return f"{self.case_name} bh/dp={self.resolution} {self.correction} ({self.get_status_display()})"

    def save(self, *args, **kwargs):
        """狀態轉換時自動設定開始與結束時間"""
        if self.status == 'RUNNING' and not self.started_at:
            self.started_at = timezone.now()

        if self.status in ('COMPLETED', 'FAILED') and not self.finished_at:
            self.finished_at = timezone.now()

        super().save(*args, **kwargs)

    def update_progress(self, state):
        self.simulated_time = state.clock.t
        self.advection_steps = state.clock.advection_index
        self.acoustic_steps = state.clock.acoustic_index
        self.counters = state.counters.as_dict()
        self.wall_seconds = state.clock.wall_seconds

    @property
    def is_finished(self):
        return self.status in ('COMPLETED', 'FAILED')

    @property
    def progress(self):
        """已模擬時間佔結束時間的比例"""
        if self.end_time <= 0:
            return 0.0
        return min(self.simulated_time / self.end_time, 1.0)
