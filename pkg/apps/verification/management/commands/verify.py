from django.core.management.base import BaseCommand, CommandError

from apps.common.decorators import log_command, usage_errors
from apps.verification.suites import SUITES, run_suite


class Command(BaseCommand):
    help = 'Run property suites; exits 1 when any check fails'

    def add_arguments(self, parser):
        parser.add_argument(
            '--suite',
            default='all',
            choices=sorted(SUITES) + ['all'],
            help='Suite to run'
        )
        parser.add_argument(
            '--eps',
            type=float,
            help='Finite-difference step for the gradients suite'
        )
        parser.add_argument(
            '--seed',
            type=int,
            default=0,
            help='Seed for the random test tensors'
        )

    @usage_errors
    @log_command('verify')
    def handle(self, *args, **options):
        results = run_suite(options['suite'], eps=options['eps'], seed=options['seed'])
        for result in results:
            line = result.line()
            self.stdout.write(self.style.SUCCESS(line) if result.passed else self.style.ERROR(line))

        failed = [result for result in results if not result.passed]
        if failed:
            raise CommandError(f"{len(failed)} of {len(results)} checks failed", returncode=1)
        self.stdout.write(self.style.SUCCESS(f'All {len(results)} checks passed'))
