from django.core.management.base import BaseCommand

from apps.common.decorators import log_command, usage_errors
from apps.network.services import InspectionService
from apps.videos.archive import DatasetArchive


class Command(BaseCommand):
    help = 'Dump per-block attention gains and shift kernels for one clip'

    def add_arguments(self, parser):
        parser.add_argument('--checkpoint', required=True, help='Checkpoint written by train')
        parser.add_argument('--data', required=True, help='Archive holding the clip')
        parser.add_argument('--clip-index', type=int, required=True, help='Clip index in the archive')
        parser.add_argument('--out-dir', required=True, help='Directory for attention.csv and shifts.csv')

    @usage_errors
    @log_command('inspect')
    def handle(self, *args, **options):
        archive = DatasetArchive.load(options['data'])
        attention, shifts = InspectionService().dump(
            options['checkpoint'], archive, options['clip_index'], options['out_dir']
        )
        self.stdout.write(self.style.SUCCESS(f'Wrote {attention} and {shifts}'))
