# Generated by Django 5.2.3 on 2026-10-18 09:12

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='SimulationRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('case_name', models.CharField(max_length=100, verbose_name='案例名稱')),
                ('layout', models.CharField(max_length=50, verbose_name='幾何配置')),
                ('resolution', models.PositiveIntegerField(help_text='結構厚度 / dp^S', verbose_name='解析度')),
                ('correction', models.CharField(choices=[('rkgc', 'RKGC'), ('none', '不修正')], default='rkgc', max_length=10, verbose_name='核梯度修正')),
                ('transport_velocity', models.BooleanField(default=False, verbose_name='傳輸速度修正')),
                ('output_dir', models.CharField(max_length=500, verbose_name='輸出目錄')),
                ('status', models.CharField(choices=[('PENDING', '等待中'), ('RUNNING', '執行中'), ('COMPLETED', '已完成'), ('FAILED', '失敗')], default='PENDING', max_length=20, verbose_name='執行狀態')),
                ('created_at', models.DateTimeField(auto_now_add=True, verbose_name='建立時間')),
                ('started_at', models.DateTimeField(blank=True, null=True, verbose_name='開始時間')),
                ('finished_at', models.DateTimeField(blank=True, null=True, verbose_name='結束時間')),
                ('end_time', models.FloatField(verbose_name='模擬結束時間 (s)')),
                ('simulated_time', models.FloatField(default=0.0, verbose_name='已模擬時間 (s)')),
                ('advection_steps', models.PositiveIntegerField(default=0, verbose_name='advection 步數')),
                ('acoustic_steps', models.PositiveIntegerField(default=0, verbose_name='acoustic 步數')),
                ('counters', models.JSONField(blank=True, default=dict, verbose_name='退化情況計數')),
                ('wall_seconds', models.FloatField(default=0.0, verbose_name='執行時間 (s)')),
                ('message', models.TextField(blank=True, help_text='執行中止時的原因', verbose_name='錯誤訊息')),
            ],
            options={
                'verbose_name': '模擬執行紀錄',
                'verbose_name_plural': '模擬執行紀錄',
                'ordering': ['-created_at'],
            },
        ),
    ]
