import json

import pytest

from config.experiment import (
    ExperimentConfig,
    build_kernel,
    build_schedule,
    grid_values,
    load_experiment_config,
)
from models.errors import ConfigError
from services.kernels import Domain, NearestNeighborKernel, OrbitKernel

BASE = dict(EXPERIMENT="classify", SEED="1", KERNEL_KIND="Zero", KERNEL_DOMAIN="FullLine",
            SCHEDULE_KIND="Power", SCHEDULE_PARAM="5")


class TestLoad:
    def test_sections(self, write_config):
        cfg = load_experiment_config(write_config(**BASE, BUDGET_REPLICAS="1e6", GRID_ALPHA="0.5, 1,2"))
        assert cfg.experiment == "classify"
        assert cfg.seed == 1
        assert cfg.kernel.domain == "FullLine"
        assert cfg.schedule.param == 5.0
        assert cfg.budget.replicas == 1_000_000
        assert cfg.grid.alpha == (0.5, 1.0, 2.0)

    def test_defaults(self, write_config):
        cfg = load_experiment_config(write_config(EXPERIMENT="classify", SEED="3"))
        assert cfg.kernel.kind == "Zero"
        assert cfg.schedule.kind == "Constant"
        assert cfg.output.format in ("csv", "json")

    def test_unknown_key(self, write_config):
        with pytest.raises(ConfigError, match="KERNEL_SHAPE"):
            load_experiment_config(write_config(**BASE, KERNEL_SHAPE="x"))

    def test_seed_is_mandatory(self, write_config):
        values = dict(BASE)
        del values["SEED"]
        with pytest.raises(ConfigError, match="SEED"):
            load_experiment_config(write_config(**values))

    @pytest.mark.parametrize("key,value", [
        ("SEED", "-4"),
        ("EXPERIMENT", "walk"),
        ("BUDGET_REPLICAS", "2.5"),
        ("BUDGET_STEP_CAP", "0"),
        ("KERNEL_KIND", "Spiral"),
        ("KERNEL_DOMAIN", "Plane"),
        ("KERNEL_PARAM", "abc"),
        ("SCHEDULE_PARAM", "0"),
        ("OUTPUT_FORMAT", "xml"),
        ("TOL_ABS", "0"),
    ])
    def test_invalid_values(self, write_config, key, value):
        with pytest.raises(ConfigError):
            load_experiment_config(write_config(**{**BASE, key: value}))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_experiment_config(str(tmp_path / "absent.env"))

    def test_experiment_specific_checks(self, write_config):
        with pytest.raises(ConfigError, match="GRID_C"):
            load_experiment_config(write_config(EXPERIMENT="phase-sweep", SEED="1", GRID_ALPHA="1"))
        with pytest.raises(ConfigError, match="T_MAX"):
            load_experiment_config(write_config(**{**BASE, "EXPERIMENT": "range"}))
        with pytest.raises(ConfigError, match="SPACE_GRAPH"):
            load_experiment_config(write_config(EXPERIMENT="space", SEED="1", SPACE_GRAPH="Z3"))
        with pytest.raises(ConfigError, match="Lattice"):
            load_experiment_config(write_config(**{**BASE, "SCHEDULE_KIND": "Space"}))


class TestOverrides:
    def test_cli_values_win(self, write_config):
        path = write_config(**BASE)
        cfg = load_experiment_config(path, {"SEED": "9", "OUTPUT_FORMAT": "json", "OUTPUT_DIR": None})
        assert cfg.seed == 9
        assert cfg.output.format == "json"

    def test_with_overrides(self, write_config):
        cfg = load_experiment_config(write_config(**BASE))
        changed = cfg.with_overrides({"SCHEDULE_PARAM": 2.0})
        assert changed.schedule.param == 2.0
        assert cfg.with_overrides(None) is cfg


class TestHash:
    def test_output_section_excluded(self, write_config):
        cfg = load_experiment_config(write_config(**BASE))
        moved = cfg.with_overrides({"OUTPUT_DIR": "elsewhere", "OUTPUT_NAME": "x"})
        assert moved.config_hash == cfg.config_hash
        assert cfg.with_overrides({"SEED": 2}).config_hash != cfg.config_hash

    def test_mapping_round_trip_through_json(self, write_config):
        cfg = load_experiment_config(write_config(**BASE, KERNEL_TABLE="0.1,-0.2"))
        mapping = json.loads(json.dumps(cfg.to_mapping()))
        assert ExperimentConfig.from_mapping(mapping) == cfg


class TestBuilders:
    def test_kernel(self, write_config):
        cfg = load_experiment_config(write_config(**BASE, KERNEL_LEFT_KIND="Constant", KERNEL_LEFT_PARAM="-0.5"))
        kernel = build_kernel(cfg)
        assert isinstance(kernel, NearestNeighborKernel)
        assert kernel.domain is Domain.FULL_LINE
        assert kernel.left.param == -0.5
        assert isinstance(build_kernel(cfg, kind="Orbit", k_max=8), OrbitKernel)

    def test_kernel_changes_are_validated(self, write_config):
        cfg = load_experiment_config(write_config(**BASE))
        with pytest.raises(ConfigError):
            build_kernel(cfg, kind="Lamperti", param=3.0)

    def test_schedule(self, write_config):
        cfg = load_experiment_config(write_config(**BASE))
        assert build_schedule(cfg).param == 5.0
        assert build_schedule(cfg, kind="Geometric", param=0.5).kind == "Geometric"
        with pytest.raises(ConfigError):
            build_schedule(cfg, kind="Space")

    def test_grid_values(self):
        assert grid_values((), 3) == [3]
        assert grid_values((1.0, 2.0), 3) == [1.0, 2.0]
