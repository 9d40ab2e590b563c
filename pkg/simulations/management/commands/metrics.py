from django.core.management.base import BaseCommand, CommandError

from simulations.exceptions import InsufficientPeriodicityError, OutputError
from simulations.metrics import extract_oscillation_metrics, parse_window, read_probe_csv


class Command(BaseCommand):
    help = '由探針 CSV 計算振盪振幅與頻率'

    def add_arguments(self, parser):
        parser.add_argument('--input', required=True, help='探針 CSV 檔案')
        parser.add_argument('--window', default='', help='分析視窗 start:end (s)，預設為整個序列')
        parser.add_argument('--columns', nargs='*', help='只分析這些欄位')

    def handle(self, *args, **options):
        try:
            window = parse_window(options['window'])
            columns, times, values = read_probe_csv(options['input'])
        except (ValueError, OutputError) as error:
            raise CommandError(str(error), returncode=1)

        selected = options['columns'] or list(columns)
        unknown = [column for column in selected if column not in columns]
        if unknown:
            raise CommandError(f'探針檔沒有欄位: {", ".join(unknown)}', returncode=1)
        index = [columns.index(column) for column in selected]

        try:
            metrics = extract_oscillation_metrics(times, values[:, index], selected, window)
        except InsufficientPeriodicityError as error:
            raise CommandError(str(error), returncode=2)
        except ValueError as error:
            raise CommandError(str(error), returncode=1)

        for line in metrics.as_lines():
            self.stdout.write(line)
