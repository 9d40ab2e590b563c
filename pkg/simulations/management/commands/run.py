from pathlib import Path

from django.conf import settings
from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from simulations.exceptions import ConfigurationError, SimulationError
from simulations.forms import load_case_config
from simulations.models import SimulationRun
from simulations.runner import run_case


class Command(BaseCommand):
    help = '執行一個基準案例，輸出探針 CSV、粒子快照與 manifest'

    def add_arguments(self, parser):
        parser.add_argument('--case', required=True, help='內建案例名稱或 JSON 設定檔路徑')
        parser.add_argument('--resolution', type=int, help='結構厚度 / dp^S（整數）')
        parser.add_argument('--correction', choices=['none', 'rkgc'], help='核梯度修正 (預設: rkgc)')
        parser.add_argument('--wkgc-alpha', type=float, help='WKGC 門檻 α (預設: 0.5)')
        parser.add_argument('--transport-velocity', choices=['on', 'off', 'auto'], help='傳輸速度位置修正 (預設: auto)')
        parser.add_argument('--end-time', type=float, help='結束時間 (s)')
        parser.add_argument('--fixed-dt', type=float, help='固定流體 acoustic 步長 (s)')
        parser.add_argument('--output', help='輸出目錄 (預設: output/<案例名稱>)')
        parser.add_argument('--probe-interval', type=float, help='探針取樣間隔 (s)')
        parser.add_argument('--snapshot-interval', type=float, help='快照間隔 (s)')
        parser.add_argument('--threads', type=int, help='鄰居搜尋的執行緒數 (預設: SPH_FSI_THREADS)')

    def handle(self, *args, **options):
        overrides = {
            'resolution': options['resolution'],
            'correction': options['correction'],
            'wkgc_alpha': options['wkgc_alpha'],
            'transport_velocity': options['transport_velocity'],
            'end_time': options['end_time'],
            'fixed_dt': options['fixed_dt'],
            'probe_interval': options['probe_interval'],
            'snapshot_interval': options['snapshot_interval'],
        }
        try:
            config = load_case_config(options['case'], overrides)
        except (ConfigurationError, ValidationError) as error:
            raise CommandError(f'案例設定錯誤：{error}', returncode=1)

        output_dir = Path(options['output'] or Path(settings.SPH_FSI_OUTPUT_ROOT) / config.name)
        record = SimulationRun.objects.create(
            case_name=config.name,
            layout=config.layout,
            resolution=config.resolution,
            correction=config.correction,
            transport_velocity=config.regularization_enabled,
            output_dir=str(output_dir),
            end_time=config.end_time,
        )

        try:
            result = run_case(config, output_dir, workers=options['threads'], record=record)
        except ConfigurationError as error:
            raise CommandError(f'案例建立失敗：{error}', returncode=1)
        except SimulationError as error:
            raise CommandError(f'執行中止：{error}', returncode=2)

        self.stdout.write(
            self.style.SUCCESS(
                f'{config.name} 完成: t={result.state.clock.t:.6g} s，'
                f'{result.state.clock.advection_index} 個 advection 步，'
                f'{len(result.series)} 個探針、{len(result.snapshots)} 個快照\n'
                f'輸出目錄: {output_dir}'
            )
        )
