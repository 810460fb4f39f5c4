import dataclasses
from pathlib import Path

from django.core.management.base import BaseCommand

from apps.common.decorators import log_command, usage_errors
from apps.training.run_config import RunConfig
from apps.training.services import Trainer, run_log
from apps.videos.archive import DatasetArchive


class Command(BaseCommand):
    help = 'Train a network on a video archive, writing metrics and checkpoints'

    def add_arguments(self, parser):
        parser.add_argument(
            '--config',
            help='Run configuration INI file ([dataset], [model], [trainer])'
        )
        parser.add_argument(
            '--data',
            required=True,
            help='Archive written by gen_data'
        )
        parser.add_argument(
            '--out-dir',
            required=True,
            help='Directory for metrics.jsonl, checkpoints, config.ini and run.log'
        )
        parser.add_argument(
            '--resume',
            action='store_true',
            help='Continue from <out-dir>/last.imgc'
        )
        parser.add_argument(
            '--init-from',
            metavar='CHECKPOINT',
            help='Start from the weights of a trained network (sets trainer.init_checkpoint)'
        )
        parser.add_argument(
            '--set',
            action='append',
            default=[],
            metavar='SECTION.KEY=VALUE',
            help='Override one configuration value (repeatable)'
        )

    @usage_errors
    @log_command('train')
    def handle(self, *args, **options):
        overrides = list(options['set'])
        if options['init_from']:
            overrides.append(f"trainer.init_checkpoint={options['init_from']}")
        run_config = RunConfig.load(options['config'], overrides)
        archive = DatasetArchive.load(options['data'])
        run_config = dataclasses.replace(run_config, model=run_config.bind(archive))

        out_dir = Path(options['out_dir'])
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / 'config.ini').write_text(run_config.to_ini(), encoding='utf-8')

        trainer = Trainer(archive, run_config.model, run_config.trainer, out_dir=out_dir)
        with run_log(out_dir):
            state = trainer.resume_state(out_dir / 'last.imgc') if options['resume'] else None
            state = trainer.run(state)

        self.stdout.write(
            self.style.SUCCESS(f'Trained {state.epoch} epochs; best top-1 {state.best_top1:.3f}; output in {out_dir}')
        )
