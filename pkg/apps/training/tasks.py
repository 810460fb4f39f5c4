from celery import shared_task

from apps.videos.archive import DatasetArchive

from .ablation import train_row
from .run_config import RunConfig


@shared_task
def run_ablation_entry(archive_path, config_text, config_id, deltas, seed):
    """Train one ablation row from an archive path and an echoed run config"""
    archive = DatasetArchive.load(archive_path)
    run_config = RunConfig.parse(config_text)
    deltas = {key: tuple(value) if isinstance(value, list) else value for key, value in deltas.items()}
    return train_row(archive, run_config, config_id, deltas, seed)
