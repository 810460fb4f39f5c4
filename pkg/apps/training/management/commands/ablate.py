from django.core.management.base import BaseCommand

from apps.common.decorators import log_command, usage_errors
from apps.network.services import write_csv
from apps.training.ablation import MATRICES, REPORT_FIELDS, run_ablation
from apps.training.run_config import RunConfig


class Command(BaseCommand):
    help = 'Train every configuration of an ablation matrix and write a CSV report'

    def add_arguments(self, parser):
        parser.add_argument(
            '--matrix',
            required=True,
            choices=sorted(MATRICES),
            help='Ablation matrix to run'
        )
        parser.add_argument(
            '--data',
            required=True,
            help='Archive written by gen_data'
        )
        parser.add_argument(
            '--config',
            help='Base run configuration INI file'
        )
        parser.add_argument(
            '--out',
            required=True,
            help='CSV report path'
        )
        parser.add_argument(
            '--seeds',
            type=int,
            nargs='+',
            default=[0],
            help='Seeds shared by every configuration'
        )
        parser.add_argument(
            '--set',
            action='append',
            default=[],
            metavar='SECTION.KEY=VALUE',
            help='Override one configuration value (repeatable)'
        )

    @usage_errors
    @log_command('ablate')
    def handle(self, *args, **options):
        run_config = RunConfig.load(options['config'], options['set'])
        rows = run_ablation(options['matrix'], options['data'], run_config, seeds=options['seeds'])
        path = write_csv(options['out'], rows, fieldnames=REPORT_FIELDS)

        for row in rows:
            self.stdout.write(f"{row['config_id']}: top1 {row['top1']:.3f} top5 {row['top5']:.3f} "
                              f"params {row['params']}")
        self.stdout.write(self.style.SUCCESS(f'Wrote {len(rows)} rows to {path}'))
