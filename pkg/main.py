"""命令列入口：python main.py <run|verify|list-cases|metrics> [選項]"""

import os
import sys

USAGE = """usage: main.py <command> [options]

commands:
  run         --case <name|path> [--resolution N] [--correction none|rkgc] [--wkgc-alpha A]
              [--transport-velocity on|off|auto] [--end-time T] [--fixed-dt DT]
              [--output DIR] [--probe-interval S] [--snapshot-interval S] [--threads N]
  verify      [--suite consistency|conservation|riemann|solid-patch|all]
  list-cases
  metrics     --input probe_<id>.csv [--window start:end] [--columns ...]

exit codes: 0 success, 1 invalid input, 2 runtime abort
"""

SUBCOMMANDS = {
    'run': 'run',
    'verify': 'verify',
    'list-cases': 'list_cases',
    'metrics': 'metrics',
}


def cli_run(argv=None):
    """執行子指令並回傳結束碼"""
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'sph_fsi.settings')
    import django
    from django.core.management import call_command
    from django.core.management.base import CommandError

    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] in ('-h', '--help'):
        sys.stdout.write(USAGE)
        return 0
    if not argv or argv[0] not in SUBCOMMANDS:
        if argv:
            sys.stderr.write(f'unknown command: {argv[0]}\n')
        sys.stderr.write(USAGE)
        return 1

    django.setup()
    command, rest = SUBCOMMANDS[argv[0]], argv[1:]
    try:
        if command == 'run':
            call_command('migrate', verbosity=0, interactive=False)
        call_command(command, *rest)
    except CommandError as error:
        sys.stderr.write(f'{error}\n')
        if str(error).startswith('Error:'):
            sys.stderr.write(USAGE)
        return error.returncode
    except SystemExit as exit_:
        return exit_.code or 0
    return 0


def main():
    sys.exit(cli_run())


if __name__ == "__main__":
    main()
