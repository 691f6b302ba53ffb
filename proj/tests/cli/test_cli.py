"""Exit codes and output format of the fbsde_lab command line tool.

Usage: test_cli.py <path-to-fbsde_lab>
"""

import json
import re
import subprocess
import sys
import tempfile
import unittest
from pathlib import Path

EXE = None

EXAMPLE1 = {"alpha": 0.8, "beta": 0.5}


class CliTest(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def lab(self, *args):
        return subprocess.run([EXE, *args], capture_output=True, text=True, timeout=600)

    def write_config(self, cfg, name="cfg.json"):
        path = self.dir / name
        path.write_text(json.dumps(cfg) if isinstance(cfg, dict) else cfg)
        return path

    def run_config(self, cfg, *extra):
        return self.lab("run", "--config", str(self.write_config(cfg)), "--out-dir", str(self.dir / "out"), *extra)

    def tau_config(self, **over):
        cfg = {"experiment": "tau-locate", "model": "example1", "model_params": EXAMPLE1,
               "n_steps": 50, "n_paths": 40, "seed": 1, "output_path": "results/tau.csv"}
        cfg.update(over)
        return cfg

    def test_list_commands(self):
        models = self.lab("list-models")
        self.assertEqual(models.returncode, 0)
        self.assertEqual(models.stdout.split(),
                         ["indicator_zero_vol", "example1", "bachelier_digital", "tanh_smooth", "girsanov_const",
                          "step_vol"])
        exps = self.lab("list-experiments")
        self.assertEqual(exps.returncode, 0)
        self.assertIn("blowup-rate", exps.stdout.split())
        self.assertEqual(len(exps.stdout.split()), 7)

    def test_success_writes_into_out_dir(self):
        r = self.run_config(self.tau_config())
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertTrue((self.dir / "out" / "tau.csv").is_file())
        self.assertTrue((self.dir / "out" / "tau.hist.csv").is_file())
        self.assertNotIn("PASS", r.stdout)

    def test_output_path_without_out_dir(self):
        cfg = self.tau_config(output_path=str(self.dir / "direct" / "t.csv"))
        r = self.lab("run", "--config", str(self.write_config(cfg)))
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertTrue((self.dir / "direct" / "t.csv").is_file())

    def test_check_lines(self):
        r = self.run_config(self.tau_config(), "--check")
        self.assertEqual(r.returncode, 0, r.stderr)
        lines = [l for l in r.stdout.splitlines() if l.startswith(("PASS", "FAIL"))]
        self.assertEqual(len(lines), 1)
        self.assertRegex(lines[0], r"^PASS tau_within_one_step measured=\S+ threshold=\S+")

    def test_breach_exits_3(self):
        # A huge threshold puts every point outside the nondegenerate set at once.
        r = self.run_config(self.tau_config(eps_sigma=10.0), "--check")
        self.assertEqual(r.returncode, 3, r.stdout + r.stderr)
        self.assertRegex(r.stdout, r"(?m)^FAIL tau_within_one_step measured=")
        # Without --check the same run succeeds.
        self.assertEqual(self.run_config(self.tau_config(eps_sigma=10.0)).returncode, 0)

    def test_validation_errors_exit_1(self):
        for bad, key in [(self.tau_config(n_paths=0), "n_paths"),
                         (self.tau_config(bogus=1), "bogus"),
                         (self.tau_config(model="nope"), "model")]:
            r = self.run_config(bad)
            self.assertEqual(r.returncode, 1, r.stderr)
            self.assertIn(f"'{key}'", r.stderr)
        r = self.run_config("{ not json")
        self.assertEqual(r.returncode, 1)
        self.assertEqual(self.lab("run", "--config", str(self.dir / "missing.json")).returncode, 1)
        self.assertEqual(self.lab("run").returncode, 1)
        self.assertEqual(self.lab().returncode, 1)
        self.assertEqual(self.lab("run", "--config", "x", "--workers", "0").returncode, 1)

    def test_numerical_failure_exits_2(self):
        cfg = {"experiment": "blowup-rate", "model": "example1", "model_params": EXAMPLE1,
               "t_values": [0.5, 0.6], "n_steps": 10, "n_paths": 10, "lambda_floor": 1e6,
               "output_path": "n.csv"}
        r = self.run_config(cfg)
        self.assertEqual(r.returncode, 2, r.stderr)
        self.assertIn("floored", r.stderr)

    def test_workers_do_not_change_output(self):
        cfg = {"experiment": "weight-crossval", "model": "tanh_smooth", "model_params": {"sigma_bar": 1.0},
               "n_steps": 20, "n_paths": 2000, "seed": 5, "output_path": "w.csv"}
        path = self.write_config(cfg)
        outs = []
        for w in ("1", "3"):
            d = self.dir / f"w{w}"
            r = self.lab("run", "--config", str(path), "--out-dir", str(d), "--workers", w)
            self.assertEqual(r.returncode, 0, r.stderr)
            outs.append((d / "w.csv").read_bytes())
        self.assertEqual(outs[0], outs[1])

    def test_help(self):
        r = self.lab("--help")
        self.assertEqual(r.returncode, 0)
        self.assertTrue(re.search(r"run", r.stdout))


if __name__ == "__main__":
    EXE = sys.argv.pop(1)
    unittest.main(verbosity=2)
