from django.core.management.base import BaseCommand

from simulations.cases import BUILTIN_CASES


class Command(BaseCommand):
    help = '列出內建的基準案例'

    def handle(self, *args, **options):
        for name, case in BUILTIN_CASES.items():
            self.stdout.write(
                f"{name:<18} end={case['end_time']:<6g} bh={case['structure_thickness']:<6g} {case['description']}"
            )
