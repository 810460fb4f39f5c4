from django.core.management.base import BaseCommand

from apps.common.decorators import log_command, usage_errors
from apps.videos.generator import generate
from apps.videos.specs import read_spec


class Command(BaseCommand):
    help = 'Generate a synthetic video archive from a dataset spec file'

    def add_arguments(self, parser):
        parser.add_argument(
            '--spec',
            required=True,
            help='INI file with a [dataset] section'
        )
        parser.add_argument(
            '--out',
            required=True,
            help='Archive path to write'
        )

    @usage_errors
    @log_command('gen_data')
    def handle(self, *args, **options):
        spec = read_spec(options['spec'])
        archive = generate(spec)
        path = archive.save(options['out'])

        self.stdout.write(f"sha256 {archive.checksum}")
        self.stdout.write(
            self.style.SUCCESS(f'Wrote {len(archive)} clips ({spec.task}) to {path}')
        )
