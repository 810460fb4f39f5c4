"""
Tests for the verification suites and the verify command
"""
from io import StringIO

import pytest
from django.core.management import call_command
from django.core.management.base import CommandError

from apps.common.exceptions import ConfigError
from apps.verification import suites
from apps.verification.suites import CheckResult, run_suite


@pytest.mark.verification
@pytest.mark.unit
class TestCheckResult:
    """Test pass/fail lines"""

    def test_passes_at_threshold(self):
        assert CheckResult('clim', 'window', 3, 3).passed

    def test_failing_line(self):
        line = CheckResult('cmem', 'identity', 0.5, 0.0).line()
        assert line.startswith('FAIL cmem/identity') and '5.000e-01' in line


@pytest.mark.verification
@pytest.mark.integration
class TestSuites:
    """Test the property suites themselves"""

    def test_shift_equivalence_is_exact_in_64_bit(self):
        results = suites.shift_equivalence(count=10)
        assert results[0].measured == 0.0
        assert all(result.passed for result in results)

    def test_cmem_suite_passes(self):
        assert all(result.passed for result in run_suite('cmem'))

    def test_clim_suite_passes(self):
        results = run_suite('clim')
        assert all(result.passed for result in results)
        windows = [result.measured for result in results if 'temporal window' in result.name]
        assert windows == [1, 3, 5, 7]

    def test_gradient_suite_reports_every_component(self):
        results = run_suite('gradients')
        components = {result.name.split(' ')[0] for result in results}
        assert {'cmem', 'clim', 'block', 'loss'} <= components

    def test_block_checks_cover_input_and_pass(self):
        block = [result for result in run_suite('gradients') if result.name.startswith('block')]
        assert 'block input' in {result.name for result in block}
        assert all(result.passed for result in block)

    def test_unknown_suite(self):
        with pytest.raises(ConfigError):
            run_suite('vibes')


@pytest.mark.cli
@pytest.mark.verification
@pytest.mark.integration
class TestVerifyCommand:
    """Test exit codes of the verify command"""

    def test_passing_suite_exits_0(self):
        out = StringIO()
        call_command('verify', suite='clim', stdout=out)
        assert 'All' in out.getvalue() and 'PASS clim/' in out.getvalue()

    def test_failing_check_exits_1(self, mocker):
        mocker.patch.dict(suites.SUITES, {'cmem': lambda **_: [CheckResult('cmem', 'forced', 1.0, 0.0)]})
        with pytest.raises(CommandError) as excinfo:
            call_command('verify', suite='cmem', stdout=StringIO())
        assert excinfo.value.returncode == 1
