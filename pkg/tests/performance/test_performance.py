"""
Runtime budgets for the verification suites and a smoke training run
"""
import time
from io import StringIO

import pytest
from django.core.management import call_command

from apps.verification.suites import shift_equivalence

SMOKE_CONFIG = """
[trainer]
epochs = 2
decay_epochs = 1
"""


@pytest.mark.slow
@pytest.mark.integration
class TestRuntimeBudgets:
    """Test that desk-scale operations finish in time"""

    def test_shift_equivalence_under_ten_seconds(self):
        started = time.perf_counter()
        results = shift_equivalence(count=100)
        assert time.perf_counter() - started < 10.0
        assert all(result.passed for result in results)

    def test_smoke_training_under_a_minute(self, create_archive, tmp_path):
        data = create_archive(train_per_class=8, val_per_class=2, frames=8, height=16, width=16)
        config = tmp_path / 'smoke.ini'
        config.write_text(SMOKE_CONFIG)
        started = time.perf_counter()
        call_command('train', config=str(config), data=str(data.save(tmp_path / 'data.imgd')),
                     out_dir=str(tmp_path / 'run'), stdout=StringIO())
        assert time.perf_counter() - started < 60.0
