#!/usr/bin/env python3
"""
Tests for configuration loading, artifact files and the spinlet command line
"""

import json
import sys
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

import numpy as np

sys.path.insert(0, str(Path(__file__).parent.parent))

import spinlet
from src.errors import ConfigError, ThresholdViolation
from src.export import write_coefficients, write_csv, write_manifest
from src.fields import power_law_spectrum, sample_field
from src.parser import ExperimentConfig, config_from_dict, load_config, read_coefficients, read_frame, read_spectrum

FIXTURES = Path(__file__).parent / "fixtures"
SMOKE_CONFIG = FIXTURES / "smoke_config.yaml"


class TestConfigLoading(unittest.TestCase):
    """Test YAML and JSON configs, aliases and validation"""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def _write(self, name: str, content: str) -> Path:
        path = Path(self.temp_dir) / name
        path.write_text(content, encoding='utf-8')
        return path

    def test_smoke_fixture(self):
        """Test the fixture loads with its aliases resolved"""
        config = load_config(SMOKE_CONFIG)
        self.assertEqual(config.L, 12)
        self.assertEqual(config.n_reps, 200)
        self.assertEqual(config.b_list, [0.4, 0.2])
        self.assertEqual(config.t_list, [0.2, 0.1])

    def test_defaults(self):
        """Test an empty file gives the defaults"""
        config = load_config(self._write("empty.yaml", ""))
        self.assertEqual(config, ExperimentConfig())

    def test_json_config(self):
        """Test JSON configs with integer-valued floats"""
        config = load_config(self._write("run.json", json.dumps({"spin": -1, "L": 20.0, "b": 0.25})))
        self.assertEqual((config.spin, config.L, config.b), (-1, 20, 0.25))

    def test_missing_file(self):
        """Test a missing file raises ConfigError"""
        with self.assertRaises(ConfigError):
            load_config(Path(self.temp_dir) / "nope.yaml")

    def test_unparsable_yaml(self):
        """Test broken YAML raises ConfigError"""
        with self.assertRaises(ConfigError):
            load_config(self._write("broken.yaml", "spin: [1, 2\n"))

    def test_unknown_key(self):
        """Test unknown keys are refused"""
        with self.assertRaises(ConfigError):
            config_from_dict({"spinn": 2})

    def test_bad_values(self):
        """Test out-of-range and mistyped values are refused"""
        for raw in ({"b": 1.5}, {"L": 2, "spin": 2}, {"a": 1.0}, {"seed": -1}, {"L": 12.5},
                    {"n_reps": True}, {"b_list": [0.4, 2.0]}, {"t_list": [0.1, -0.1]}, {"alpha": "steep"}):
            with self.subTest(raw=raw):
                with self.assertRaises(ConfigError):
                    config_from_dict(raw)

    def test_not_a_mapping(self):
        """Test a YAML list at top level is refused"""
        with self.assertRaises(ConfigError):
            load_config(self._write("list.yaml", "- 1\n- 2\n"))

    def test_overrides(self):
        """Test None overrides keep file values and others replace them"""
        config = load_config(SMOKE_CONFIG).with_overrides({"seed": 99, "b": None, "j_list": [-3]})
        self.assertEqual(config.seed, 99)
        self.assertEqual(config.b, 0.3)
        self.assertEqual(config.j_list, [-3])

    def test_manifest_round_trip(self):
        """Test a manifest written by a run reloads as the same config"""
        config = load_config(SMOKE_CONFIG)
        path = write_manifest(Path(self.temp_dir), "simulate", config.to_dict(), [], {})
        self.assertEqual(load_config(path), config)

    def test_spectrum_file(self):
        """Test a tabulated spectrum replaces the power law"""
        path = self._write("spectrum.csv", "l,C_l\n2,1.0\n3,0.5\n5,0.25\n")
        spec = config_from_dict({"spin": 2, "L": 6, "spectrum_file": str(path)}).spectrum()
        np.testing.assert_array_equal(spec.values, [0.0, 0.0, 1.0, 0.5, 0.0, 0.25, 0.0])

    def test_bad_spectrum_file(self):
        """Test malformed spectrum files raise ConfigError"""
        with self.assertRaises(ConfigError):
            read_spectrum(self._write("bad.csv", "l,C_l\ntwo,1.0\n"), 0)
        with self.assertRaises(ConfigError):
            read_spectrum(self._write("neg.csv", "l,C_l\n1,-1.0\n"), 0)
        with self.assertRaises(ConfigError):
            read_spectrum(Path(self.temp_dir) / "absent.csv", 0)


class TestArtifacts(unittest.TestCase):
    """Test artifact writers and readers"""

    def setUp(self):
        self.temp_dir = Path(tempfile.mkdtemp())

    def test_coefficients_round_trip_exactly(self):
        """Test coefficient files reload bit for bit"""
        coeffs = sample_field(power_law_spectrum(2, 10, 3.0), 3).coeffs
        path = write_coefficients(self.temp_dir / "coefficients.csv", coeffs)
        np.testing.assert_array_equal(read_coefficients(path).data, coeffs.data)

    def test_coefficients_header_required(self):
        """Test coefficient files without the JSON header are refused"""
        path = self.temp_dir / "plain.csv"
        path.write_text("l,m,re,im\n2,0,1.0,0.0\n", encoding='utf-8')
        with self.assertRaises(ConfigError):
            read_coefficients(path)

    def test_csv_row_length(self):
        """Test rows must match the header"""
        with self.assertRaises(ValueError):
            write_csv(self.temp_dir / "t.csv", ["a", "b"], [(1, 2, 3)])

    def test_csv_cells(self):
        """Test floats are written with repr and booleans in lower case"""
        path = write_csv(self.temp_dir / "cells.csv", ["x", "ok"], [(0.1, True), (np.float64(1e-17), np.bool_(False))])
        self.assertEqual(path.read_text(encoding='utf-8'), "x,ok\n0.1,true\n1e-17,false\n")

    def test_invalid_frame_file(self):
        """Test unreadable frame files raise ConfigError"""
        path = self.temp_dir / "frame.json"
        path.write_text("{not json", encoding='utf-8')
        with self.assertRaises(ConfigError):
            read_frame(path)
        with self.assertRaises(ConfigError):
            read_frame(self.temp_dir / "missing.json")


class TestMain(unittest.TestCase):
    """Test spinlet.main end to end on small sizes"""

    def setUp(self):
        self.temp_dir = Path(tempfile.mkdtemp())

    def _main(self, *args: str) -> int:
        return spinlet.main(list(args) + ['--config', str(SMOKE_CONFIG), '--quiet'])

    def test_version(self):
        """Test --version exits cleanly"""
        with self.assertRaises(SystemExit) as ctx:
            spinlet.main(['--version'])
        self.assertEqual(ctx.exception.code, 0)

    def test_unknown_subcommand(self):
        """Test argparse rejects unknown subcommands with status 2"""
        with self.assertRaises(SystemExit) as ctx:
            spinlet.main(['transform'])
        self.assertEqual(ctx.exception.code, 2)

    def test_config_error_status(self):
        """Test invalid configuration exits with status 2"""
        self.assertEqual(self._main('simulate', '--b', '1.5', '--out', str(self.temp_dir)), 2)
        self.assertEqual(spinlet.main(['simulate', '--config', str(self.temp_dir / 'none.yaml')]), 2)

    def test_threshold_failure_status(self):
        """Test a failed acceptance check exits with status 1"""
        with patch('spinlet.run', side_effect=ThresholdViolation("clt_ks", 0.2, 0.03)):
            self.assertEqual(self._main('clt', '--out', str(self.temp_dir)), 1)

    def test_interrupt_status(self):
        """Test Ctrl+C exits with status 1"""
        with patch('spinlet.run', side_effect=KeyboardInterrupt):
            self.assertEqual(self._main('simulate', '--out', str(self.temp_dir)), 1)

    def test_flags_reach_config(self):
        """Test command-line flags override the config file"""
        with patch('spinlet.run') as run:
            self._main('sj-test', '--lmax', '20', '--reps', '50', '--j', '-3', '--j', '-4',
                       '--model-scale', '1.2', '--out', str(self.temp_dir))
        command, config = run.call_args.args
        self.assertEqual(command, 'sj-test')
        self.assertEqual((config.L, config.n_reps, config.j_list, config.model_scale), (20, 50, [-3, -4], 1.2))
        self.assertEqual(config.b_list, [0.4, 0.2])

    def test_frame_aliases(self):
        """Test 'frame build' and 'frame check' map to the hyphenated subcommands"""
        with patch('spinlet.run') as run:
            self._main('frame', 'build', '--out', str(self.temp_dir))
            self._main('frame', 'check', '--out', str(self.temp_dir))
        self.assertEqual([c.args[0] for c in run.call_args_list], ['frame-build', 'frame-check'])

    def test_simulate_is_reproducible(self):
        """Test two simulate runs with the same seed write identical CSV files"""
        first, second = self.temp_dir / "one", self.temp_dir / "two"
        self.assertEqual(self._main('simulate', '--out', str(first)), 0)
        self.assertEqual(self._main('simulate', '--out', str(second)), 0)
        names = sorted(p.name for p in first.glob("*.csv"))
        self.assertEqual(names, ["coefficients.csv", "sample_spectrum.csv", "spectrum.csv", "statistics.csv",
                                 "wavelets.csv"])
        for name in names:
            self.assertEqual((first / name).read_bytes(), (second / name).read_bytes(), name)
        manifest = json.loads((first / "manifest.json").read_text(encoding='utf-8'))
        self.assertEqual(manifest["subcommand"], "simulate")
        self.assertEqual(manifest["config"]["seed"], 7)

    def test_threads_do_not_change_results(self):
        """Test simulate output does not depend on the thread count"""
        one, two = self.temp_dir / "t1", self.temp_dir / "t2"
        self._main('simulate', '--out', str(one), '--threads', '1')
        self._main('simulate', '--out', str(two), '--threads', '2')
        for name in ("wavelets.csv", "statistics.csv"):
            self.assertEqual((one / name).read_bytes(), (two / name).read_bytes(), name)

    def test_harmonics_check(self):
        """Test harmonics-check passes its thresholds at L = 12"""
        self.assertEqual(self._main('harmonics-check', '--out', str(self.temp_dir)), 0)
        self.assertTrue((self.temp_dir / "harmonics.csv").exists())

    def test_frame_build_then_simulate(self):
        """Test a frame written by frame-build is read back by simulate"""
        frame_path = self.temp_dir / "frame.json"
        self.assertEqual(self._main('frame-build', '--out', str(self.temp_dir), '--frame', str(frame_path)), 0)
        self.assertTrue(frame_path.exists())
        self.assertEqual(self._main('simulate', '--out', str(self.temp_dir / "sim"), '--frame', str(frame_path)), 0)

    def test_frame_check_reports(self):
        """Test frame-check writes one row per b with gap/b and the local order of the gap"""
        self._main('frame-check', '--out', str(self.temp_dir), '--no-check')
        lines = (self.temp_dir / "frame_check.csv").read_text(encoding='utf-8').splitlines()
        self.assertEqual(lines[0], "b,A_est,B_est,gap,C0_est,gap_over_b,order")
        self.assertEqual(len(lines), 3)
        self.assertEqual([float(line.split(",")[0]) for line in lines[1:]], [0.4, 0.2])
        self.assertEqual(lines[1].split(",")[-1], "nan")
        summary = json.loads((self.temp_dir / "manifest.json").read_text(encoding='utf-8'))["summary"]
        self.assertIn("gap_order", summary)
        self.assertIn("linear_c0", summary)

    def test_manifest_is_byte_identical(self):
        """Test rerunning with the same seed rewrites manifest.json byte for byte"""
        out = self.temp_dir / "again"
        self.assertEqual(self._main('simulate', '--out', str(out)), 0)
        first = (out / "manifest.json").read_bytes()
        self.assertEqual(self._main('simulate', '--out', str(out)), 0)
        self.assertEqual((out / "manifest.json").read_bytes(), first)
        self.assertNotIn("created", json.loads(first))

    def test_manifest_timestamp_flag(self):
        """Test --timestamp records the creation time"""
        self.assertEqual(self._main('simulate', '--out', str(self.temp_dir), '--timestamp'), 0)
        manifest = json.loads((self.temp_dir / "manifest.json").read_text(encoding='utf-8'))
        self.assertIn("created", manifest)

    def test_write_manifest_created(self):
        """Test write_manifest adds the creation time only when given"""
        plain = json.loads(write_manifest(self.temp_dir, "clt", {"seed": 1}, [], {}).read_text(encoding='utf-8'))
        self.assertNotIn("created", plain)
        stamped = write_manifest(self.temp_dir, "clt", {"seed": 1}, [], {}, created="2026-01-01T00:00:00")
        self.assertEqual(json.loads(stamped.read_text(encoding='utf-8'))["created"], "2026-01-01T00:00:00")


if __name__ == '__main__':
    unittest.main(verbosity=2)
