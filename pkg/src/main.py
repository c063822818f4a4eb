import argparse
import sys

from config.experiment import EXPERIMENTS, load_experiment_config
from config.settings import Config
from core.emit import emit
from core.experiments import EXPERIMENT_RUNNERS, write_walk_trace
from models.database import RunLedger
from models.errors import ConfigError, GateFailure, ImpatientWalkError

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


class ExperimentOrchestrator:
    """
    Runs one harness experiment from a config file: load and validate the config,
    run the experiment, write the result file (and optional walk trace), report.

    Exit codes: 0 when every assertion holds, 1 on a failed assertion or gate,
    2 on a configuration error.
    """

    def __init__(self, args):
        self.args = args
        self.config = None
        ledger_path = args.db or Config.RUN_LEDGER
        self.ledger = RunLedger(ledger_path) if ledger_path else None

    def load_config(self):
        overrides = {
            "EXPERIMENT": self.args.experiment,
            "SEED": self.args.seed,
            "OUTPUT_DIR": self.args.out,
            "OUTPUT_FORMAT": self.args.format,
            "BUDGET_WORKERS": self.args.workers,
        }
        self.config = load_experiment_config(self.args.config, overrides)
        return self.config

    def report_progress(self, done, total, label):
        print(f"   [{done}/{total}] {label}", flush=True)

    def print_summary(self, result, path):
        print(f"\n{'='*60}")
        print(f"📊 {result.experiment.upper()} RESULTS:")
        print(f"   Rows: {len(result.rows)}")
        for key, value in result.summary.items():
            if isinstance(value, (dict, list)):
                continue
            print(f"   {key}: {value}")
        print(f"   Output: {path}")
        if result.failures:
            print(f"\n❌ {len(result.failures)} assertion(s) failed:")
            for message in result.failures:
                print(f"   - {message}")
        else:
            print("\n✅ All assertions passed")
        print(f"{'='*60}\n")

    def _record(self, status, exit_code, path=None, summary=None):
        if self.ledger is None or self.config is None:
            return
        self.ledger.record_run(self.config.experiment, self.config.config_hash, self.config.seed,
                               status, exit_code, path, summary)

    def run(self):
        """Run the experiment and return the process exit code."""
        print("=" * 60)
        print(f"🧪 IMPATIENT WALK HARNESS: {self.args.experiment}")
        print(f"   Config: {self.args.config}")
        print("=" * 60)

        try:
            cfg = self.load_config()
        except ConfigError as e:
            print(f"⚠️  Config error: {e}")
            return EXIT_CONFIG

        print(f"   Seed: {cfg.seed}")
        print(f"   Config hash: {cfg.config_hash[:16]}")
        if self.ledger is not None and self.ledger.is_recorded(cfg.config_hash, cfg.experiment):
            print("   (this config has run before; results will be overwritten)")

        try:
            result = EXPERIMENT_RUNNERS[cfg.experiment](cfg, progress=self.report_progress)
        except GateFailure as e:
            print(f"❌ Gate failed: {e}")
            self._record("gate_failed", EXIT_FAILED)
            return EXIT_FAILED
        except ImpatientWalkError as e:
            print(f"⚠️  Config error: {e}")
            self._record("config_error", EXIT_CONFIG)
            return EXIT_CONFIG

        path = emit(result, cfg)
        if self.args.trace:
            try:
                write_walk_trace(cfg, self.args.trace)
                print(f"   Trace: {self.args.trace}")
            except ConfigError as e:
                print(f"⚠️  Config error: {e}")
                self._record("config_error", EXIT_CONFIG, path)
                return EXIT_CONFIG

        self.print_summary(result, path)
        exit_code = EXIT_OK if result.passed else EXIT_FAILED
        self._record("passed" if result.passed else "failed", exit_code, path, result.summary)
        if self.ledger is not None:
            stats = self.ledger.get_stats()
            print(f"   Ledger: {stats['total_runs']} runs, {stats['passed']} passed, "
                  f"{stats['failed']} failed, {stats['config_errors']} config errors")
        return exit_code


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="experiment config file (KEY=VALUE)")
    common.add_argument("--seed", type=int, default=None, help="override SEED")
    common.add_argument("--out", default=None, help="override OUTPUT_DIR")
    common.add_argument("--format", choices=("csv", "json"), default=None, help="override OUTPUT_FORMAT")
    common.add_argument("--trace", default=None, help="also write one walk's (step, vertex, T) trace here")
    common.add_argument("--workers", type=int, default=None, help="override BUDGET_WORKERS")
    common.add_argument("--db", default=None, help="sqlite run ledger (default: IMPWALK_RUN_LEDGER)")

    parser = argparse.ArgumentParser(
        prog="impatient-walk",
        description="Impatient and ageing random walks: series certification and Monte Carlo experiments.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return ExperimentOrchestrator(args).run()


if __name__ == "__main__":
    sys.exit(main())
