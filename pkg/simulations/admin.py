from django.contrib import admin
from django.utils.html import format_html

from .models import SimulationRun


@admin.register(SimulationRun)
class SimulationRunAdmin(admin.ModelAdmin):
    """模擬執行紀錄的 Admin 管理介面"""

    list_display = ['id', 'case_name', 'resolution', 'correction', 'transport_velocity', 'colored_status', 'progress_display', 'created_at', 'wall_seconds']

    list_filter = ['status', 'case_name', 'correction', 'created_at']

    search_fields = ['case_name', 'layout', 'output_dir']

    fieldsets = (
        ('案例', {
            'fields': ('case_name', 'layout', 'resolution', 'correction', 'transport_velocity', 'output_dir')
        }),
        ('執行狀態', {
            'fields': ('status', 'end_time', 'simulated_time', 'advection_steps', 'acoustic_steps', 'wall_seconds')
        }),
        (
            '診斷',
            {
                'fields': ('counters', 'message'),
                'classes': ('collapse', ),
            }),
        ('時間記錄', {
            'fields': ('created_at', 'started_at', 'finished_at'),
            'classes': ('collapse', ),
        }),
    )

    readonly_fields = ['created_at', 'started_at', 'finished_at']

    list_per_page = 25

    ordering = ['-created_at']

    date_hierarchy = 'created_at'

    def colored_status(self, obj):
        """為狀態添加顏色標示"""
        colors = {
            'PENDING': '#6c757d',  # 灰色
            'RUNNING': '#17a2b8',  # 藍色
            'COMPLETED': '#28a745',  # 綠色
            'FAILED': '#dc3545',  # 紅色
        }
        color = colors.get(obj.status, '#6c757d')
        return format_html('<span style="color: {}; font-weight: bold;">{}</span>', color, obj.get_status_display())

    colored_status.short_description = '執行狀態'
    colored_status.admin_order_field = 'status'

    def progress_display(self, obj):
        return f'{obj.progress:.0%}'

    progress_display.short_description = '進度'

    actions = ['mark_stale_failed']

    def mark_stale_failed(self, request, queryset):
        """把中斷後仍停在執行中的紀錄標記為失敗"""
        count = 0
        for run in queryset.filter(status='RUNNING'):
            run.status = 'FAILED'
            run.message = run.message or '執行中斷（由管理介面標記）'
            run.save()
            count += 1

        self.message_user(request, f'已將 {count} 筆執行紀錄標記為失敗。')

    mark_stale_failed.short_description = '將選中的執行中紀錄標記為失敗'
