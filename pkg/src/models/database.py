import json
import os
import sqlite3
from datetime import datetime, timezone


class RunLedger:
    """
    sqlite record of harness runs, keyed by experiment and config hash.

    The ledger lives next to the results, never inside them: result files carry
    no timestamps, the ledger does.
    """

    def __init__(self, db_path=None):
        if db_path is None:
            # __file__ is at: <root>/src/models/database.py
            models_dir = os.path.dirname(os.path.abspath(__file__))
            project_root = os.path.dirname(os.path.dirname(models_dir))
            db_path = os.path.join(project_root, 'data', 'runs.db')
        self.db_name = db_path

        db_dir = os.path.dirname(self.db_name)
        if db_dir and not os.path.exists(db_dir):
            os.makedirs(db_dir)

        self.init_db()

    def init_db(self):
        conn = sqlite3.connect(self.db_name)
        cursor = conn.cursor()
        cursor.execute('''
            CREATE TABLE IF NOT EXISTS runs (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                experiment TEXT,
                config_hash TEXT,
                seed INTEGER,
                status TEXT,
                exit_code INTEGER,
                output_path TEXT,
                summary_json TEXT,
                recorded_at TIMESTAMP
            )
        ''')
        cursor.execute('CREATE INDEX IF NOT EXISTS runs_by_config ON runs (config_hash, experiment)')
        conn.commit()
        conn.close()

    def is_recorded(self, config_hash, experiment):
        """Whether this experiment already ran (with any outcome) for this config."""
        conn = sqlite3.connect(self.db_name)
        cursor = conn.cursor()
        cursor.execute('SELECT id FROM runs WHERE config_hash = ? AND experiment = ?',
                       (config_hash, experiment))
        result = cursor.fetchone()
        conn.close()
        return result is not None

    def record_run(self, experiment, config_hash, seed, status, exit_code, output_path=None, summary=None):
        conn = sqlite3.connect(self.db_name)
        cursor = conn.cursor()
        cursor.execute('''
            INSERT INTO runs
            (experiment, config_hash, seed, status, exit_code, output_path, summary_json, recorded_at)
            VALUES (?, ?, ?, ?, ?, ?, ?, ?)
        ''', (experiment, config_hash, seed, status, exit_code, output_path,
              json.dumps(summary or {}, sort_keys=True, default=str),
              datetime.now(timezone.utc).isoformat()))
        conn.commit()
        conn.close()

    def get_stats(self):
        """Run counts by outcome."""
        conn = sqlite3.connect(self.db_name)
        cursor = conn.cursor()
        cursor.execute('''
            SELECT
                COUNT(*) as total,
                SUM(CASE WHEN exit_code = 0 THEN 1 ELSE 0 END) as passed,
                SUM(CASE WHEN exit_code = 1 THEN 1 ELSE 0 END) as failed,
                SUM(CASE WHEN exit_code = 2 THEN 1 ELSE 0 END) as config_errors,
                COUNT(DISTINCT config_hash) as configs
            FROM runs
        ''')
        result = cursor.fetchone()
        conn.close()

        return {
            'total_runs': result[0] or 0,
            'passed': result[1] or 0,
            'failed': result[2] or 0,
            'config_errors': result[3] or 0,
            'distinct_configs': result[4] or 0,
        }
