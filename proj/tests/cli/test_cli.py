#!/usr/bin/env python3
"""Contract tests for the cpd command-line tool.

usage: test_cli.py CPD_BINARY SCHEMA_DIR DATA_DIR
"""

import json
import os
import subprocess
import sys
import tempfile
import unittest

import jsonschema

CPD = SCHEMAS = DATA = None
# Small Monte Carlo budgets keep each run well under a second.
FAST = ["--grid-steps", "1000", "--replications", "5000"]


def run(*args, stdin=None):
    return subprocess.run([CPD, *args], input=stdin, capture_output=True, text=True, timeout=600)


def schema(name):
    with open(os.path.join(SCHEMAS, f"{name}.schema.json")) as f:
        return json.load(f)


def data(name):
    return os.path.join(DATA, name)


class Contract(unittest.TestCase):
    def ok(self, *args, stdin=None):
        r = run(*args, stdin=stdin)
        self.assertEqual(r.returncode, 0, msg=r.stderr)
        return r

    def report(self, name, *args):
        out = json.loads(self.ok(*args).stdout)
        jsonschema.validate(out, schema(name))
        return out

    def test_help_lists_flags(self):
        r = self.ok("--help")
        for sub in ("critval", "offline", "segment", "monitor", "trend", "simulate"):
            self.assertIn(sub, r.stdout)
        flags = {
            "critval": ["--kind", "--d", "--alpha", "--gamma", "--seed", "--table", "--critval-table", "--config"],
            "segment": ["--input", "--columns", "--alpha", "--min-seg", "--output"],
            "monitor": ["--detector", "--window", "--quiet-gap", "--m", "--p1", "--p2", "--p3", "--h"],
            "trend": ["--index", "--mode", "--h"],
            "simulate": ["--grid", "--attackers", "--mode", "--reps", "--heatmap", "--threads"],
        }
        for sub, names in flags.items():
            text = self.ok(sub, "--help").stdout
            for flag in names:
                self.assertIn(flag, text, msg=f"{sub} --help lacks {flag}")

    def test_critval_deterministic(self):
        args = ["critval", "--kind", "offline", "--d", "1", "--alpha", "0.05", "--seed", "7", *FAST]
        a, b = self.ok(*args).stdout, self.ok(*args).stdout
        self.assertEqual(a, b)
        out = json.loads(a)
        jsonschema.validate(out, schema("critval"))
        self.assertGreater(out["value"], 1.6)
        self.assertLess(out["value"], 2.1)

    def test_critval_thread_count_irrelevant(self):
        base = ["critval", "--kind", "standard", "--d", "2", "--gamma", "0.25", "--seed", "3", *FAST]
        self.assertEqual(self.ok(*base, "--threads", "1").stdout, self.ok(*base, "--threads", "3").stdout)

    def test_offline_finds_a_change(self):
        out = self.report("offline", "offline", "--input", data("steps.csv"), *FAST)
        self.assertTrue(out["reject"])
        self.assertIn(out["cps"][0], (100, 200))

    def test_segment_recovers_two_changes(self):
        out = self.report("segment", "segment", "--input", data("steps.csv"), *FAST)
        self.assertEqual(out["cps"], [100, 200])
        self.assertFalse(out["hit_round_cap"])

    def test_output_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "seg.json")
            r = self.ok("segment", "--input", data("steps.csv"), "--output", path, *FAST)
            self.assertEqual(r.stdout, "")
            with open(path) as f:
                jsonschema.validate(json.load(f), schema("segment"))

    def test_monitor_quiet_on_change_free_stream(self):
        with open(data("flat.csv")) as f:
            r = self.ok("monitor", "--columns", "1,2", "--alpha", "0.01", *FAST, stdin=f.read())
        self.assertEqual(r.stdout, "")
        self.assertIn('"config"', r.stderr)

    def test_monitor_reports_level_shift(self):
        with open(data("steps.csv")) as f:
            r = self.ok("monitor", "--alpha", "0.01", *FAST, stdin=f.read())
        events = [json.loads(line) for line in r.stdout.splitlines()]
        self.assertGreaterEqual(len(events), 1)
        for e in events:
            jsonschema.validate(e, schema("monitor_event"))
        first = events[0]
        self.assertEqual(first["direction"], "up")
        self.assertEqual(first["action"], "scale_up")
        self.assertGreater(first["index"], 100)
        self.assertLessEqual(abs(first["onset"] - 100), 5)

    def test_trend_direction(self):
        up = self.report("trend", "trend", "--input", data("steps.csv"), "--index", "100")
        down = self.report("trend", "trend", "--input", data("steps.csv"), "--index", "200", "--mode", "interval")
        self.assertEqual((up["direction"], down["direction"]), ("up", "down"))
        point = self.report("trend", "trend", "--input", data("steps.csv"), "--index", "101", "--mode", "point")
        self.assertEqual(point["span"], 1)

    def test_simulate_and_heatmap(self):
        with tempfile.TemporaryDirectory() as tmp:
            heat = os.path.join(tmp, "heat.csv")
            out = self.report(
                "simulate", "simulate", "--grid", "6x6", "--reps", "5", "--m", "100", "--attack-start", "151",
                "--horizon-samples", "300", "--heatmap", heat, *FAST)
            self.assertEqual(len(out["attackers"]), 3)
            with open(heat) as f:
                rows = [line.split(",") for line in f.read().splitlines()]
            self.assertEqual([len(r) for r in rows], [6] * 6)
            self.assertEqual(float(rows[0][1]), out["detection_probability"][0][1])
            cl = self.report(
                "simulate", "simulate", "--grid", "6x6", "--reps", "3", "--mode", "cluster", "--m", "100",
                "--attack-start", "151", "--horizon-samples", "300", *FAST)
            self.assertEqual(len(cl["cluster_detection_probability"]), 9)

    def test_table_round_trip_and_strict_lookup(self):
        with tempfile.TemporaryDirectory() as tmp:
            table = os.path.join(tmp, "cv.csv")
            small = ["--grid-steps", "100", "--replications", "1000", "--horizon", "2"]
            built = self.report("critval_table", "critval", "--table", table, *small)
            self.assertGreater(built["entries"], 0)
            fresh = json.loads(self.ok("critval", "--kind", "standard", "--d", "2", "--gamma", "0.15", *small).stdout)
            looked = json.loads(self.ok("critval", "--kind", "standard", "--d", "2", "--gamma", "0.15",
                                        "--critval-table", table).stdout)
            self.assertEqual(fresh["value"], looked["value"])
            r = run("critval", "--kind", "standard", "--d", "5", "--critval-table", table)
            self.assertEqual(r.returncode, 1, msg=r.stderr)

    def test_exit_codes(self):
        self.assertEqual(run("offline", "--input", data("missing.csv"), *FAST).returncode, 1)
        self.assertEqual(run("offline", "--input", data("steps.csv"), "--alpha", "1.5").returncode, 2)
        self.assertEqual(run("offline", "--input", data("steps.csv"), "--columns", "x").returncode, 2)
        self.assertEqual(run("offline", "--input", data("steps.csv"), "--no-such-flag").returncode, 2)
        self.assertEqual(run("nonsense").returncode, 2)
        self.assertEqual(run().returncode, 2)
        self.assertEqual(run("trend", "--input", data("steps.csv"), "--index", "295").returncode, 2)
        # A column the file lacks is a data problem, not a usage one.
        r = run("offline", "--input", data("steps.csv"), "--columns", "2", *FAST)
        self.assertEqual(r.returncode, 1)
        self.assertNotEqual(r.stderr, "")

    def test_config_precedence(self):
        with tempfile.TemporaryDirectory() as tmp:
            cfg = os.path.join(tmp, "run.ini")
            with open(cfg, "w") as f:
                f.write("# comment\nalpha = 0.01\nseed = 3\nno_correction = true\ngrid-steps = 1000\n"
                        "replications = 5000\n")
            from_file = json.loads(self.ok("critval", "--config", cfg).stdout)
            self.assertEqual(from_file["alpha"], 0.01)
            self.assertEqual(from_file["params"]["seed"], 3)
            self.assertFalse(from_file["params"]["continuity_correction"])
            overridden = json.loads(self.ok("critval", "--config", cfg, "--alpha", "0.1").stdout)
            self.assertEqual(overridden["alpha"], 0.1)
            self.assertEqual(overridden["params"]["seed"], 3)
            direct = json.loads(self.ok("critval", "--alpha", "0.01", "--seed", "3", "--no-correction", *FAST).stdout)
            self.assertEqual(direct["value"], from_file["value"])
            with open(cfg, "a") as f:
                f.write("frobnicate = 2\n")
            self.assertEqual(run("critval", "--config", cfg).returncode, 2)


if __name__ == "__main__":
    if len(sys.argv) < 4:
        sys.exit(__doc__)
    CPD, SCHEMAS, DATA = sys.argv[1:4]
    unittest.main(argv=[sys.argv[0], "-v"])
