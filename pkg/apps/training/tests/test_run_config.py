"""
Tests for INI run configurations
"""
import pytest

from apps.common.exceptions import ConfigError, ShapeError
from apps.training.run_config import RunConfig

CONFIG_TEXT = """
[dataset]
task = phase-order2
frames = 8
train_per_class = 6

[model]
blocks = 32,32
shift_mode = frozen
cmem_enabled = false

[trainer]
epochs = 4
decay_epochs = 2,3
lr = 0.05
"""


@pytest.mark.training
@pytest.mark.unit
class TestRunConfig:
    """Test parsing, overrides and echo"""

    def test_sections_cast_to_fields(self):
        run_config = RunConfig.parse(CONFIG_TEXT)
        assert run_config.dataset.task == 'phase-order2'
        assert run_config.model.blocks == (32, 32)
        assert run_config.model.cmem_enabled is False
        assert run_config.trainer.decay_epochs == (2, 3)
        assert run_config.trainer.lr == 0.05

    def test_echo_round_trips(self):
        run_config = RunConfig.parse(CONFIG_TEXT)
        assert RunConfig.parse(run_config.to_ini()) == run_config

    def test_defaults_without_file(self):
        run_config = RunConfig.load()
        assert run_config.recipe == 'desk'
        assert run_config.trainer.epochs == 30

    def test_overrides_win(self):
        run_config = RunConfig.parse(CONFIG_TEXT, ['trainer.lr=0.2', 'model.shift_mode=random'])
        assert run_config.trainer.lr == 0.2
        assert run_config.model.shift_mode == 'random'

    @pytest.mark.parametrize('text', [
        '[model]\nwidth = 3\n',
        '[optimizer]\nlr = 0.1\n',
        '[trainer]\nlr = fast\n',
    ])
    def test_rejected(self, text):
        with pytest.raises(ConfigError):
            RunConfig.parse(text)

    def test_bad_override_syntax(self):
        with pytest.raises(ConfigError):
            RunConfig.parse('', ['lr=0.1'])

    def test_trainer_dropout_reaches_model(self):
        run_config = RunConfig.parse('[trainer]\ndropout = 0.3\n')
        assert run_config.model.dropout == 0.3

    def test_finetune_recipe(self):
        run_config = RunConfig.parse('[trainer]\nrecipe = finetune\n')
        assert run_config.trainer.lr == 0.001
        assert run_config.model.norm_mode == 'frozen-except-first'
        assert run_config.model.dropout == 0.8

    def test_attention_form_alias_is_read(self):
        run_config = RunConfig.parse('[model]\nattention_form = literal-Eq8\n')
        assert run_config.model.attention_form == 'sigmoid-offset'
        assert run_config.model.cmem_config().attention_form == 'sigmoid-offset'
        assert RunConfig.parse(run_config.to_ini()) == run_config

    def test_init_checkpoint_is_read(self):
        run_config = RunConfig.parse('[trainer]\nrecipe = finetune\ninit_checkpoint = runs/base/best.imgc\n')
        assert run_config.trainer.init_checkpoint == 'runs/base/best.imgc'
        assert RunConfig.parse(run_config.to_ini()) == run_config

    def test_img_seed_overrides_every_seed(self, monkeypatch):
        monkeypatch.setenv('IMG_SEED', '17')
        run_config = RunConfig.parse('[trainer]\nseed = 3\n')
        assert run_config.dataset.seed == run_config.model.seed == run_config.trainer.seed == 17

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            RunConfig.load(tmp_path / 'absent.ini')


@pytest.mark.training
@pytest.mark.unit
class TestBind:
    """Test fitting the model to an archive"""

    def test_widths_come_from_archive(self, create_archive):
        model = RunConfig.parse('').bind(create_archive())
        assert (model.in_channels, model.num_classes) == (1, 4)

    def test_explicit_mismatch_names_both(self, create_archive):
        with pytest.raises(ShapeError) as excinfo:
            RunConfig.parse('[model]\nnum_classes = 6\n').bind(create_archive())
        assert excinfo.value.expected == 6 and excinfo.value.actual == 4
