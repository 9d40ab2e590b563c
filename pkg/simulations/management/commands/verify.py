from django.core.management.base import BaseCommand, CommandError

from simulations.verification import SUITES, run_suite


class Command(BaseCommand):
    help = '執行數值性質驗證套件'

    def add_arguments(self, parser):
        parser.add_argument(
            '--suite',
            choices=sorted(SUITES) + ['all'],
            default='all',
            help='驗證套件 (預設: all)'
        )
        parser.add_argument('--threads', type=int, help='鄰居搜尋的執行緒數')

    def handle(self, *args, **options):
        names = sorted(SUITES) if options['suite'] == 'all' else [options['suite']]
        failed = []
        for name in names:
            for result in run_suite(name, workers=options['threads']):
                if result.passed:
                    self.stdout.write(self.style.SUCCESS(str(result)))
                else:
                    self.stdout.write(self.style.ERROR(str(result)))
                    failed.append(result)

        if failed:
            raise CommandError(f'{len(failed)} 項驗證未通過', returncode=2)
        self.stdout.write(self.style.SUCCESS(f'全部通過: {", ".join(names)}'))
