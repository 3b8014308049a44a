# Copyright 2026 The Wideflow Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""End-to-end checks of the wideflow command line tool.

Runs each subcommand, checks exit codes, validates every JSON output against
the schemas, and checks that reruns and worker counts reproduce outputs byte
for byte.
"""

import filecmp
import json
import pathlib
import subprocess
import sys
import tempfile
import unittest

import jsonschema

CLI = pathlib.Path(sys.argv.pop(1))
ROOT = pathlib.Path(__file__).resolve().parent.parent
SCHEMAS = ROOT / "schemas"
CONFIGS = ROOT / "configs"


def schema(name):
    return json.loads((SCHEMAS / f"{name}.schema.json").read_text())


def run(*args, cwd=None):
    return subprocess.run([str(CLI), *map(str, args)], cwd=cwd, capture_output=True,
                          text=True, timeout=600)


class CliTest(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = pathlib.Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def out(self, name):
        return self.tmp / name

    def check(self, result, code):
        self.assertEqual(result.returncode, code, msg=result.stdout + result.stderr)

    def validate(self, path, name):
        doc = json.loads(path.read_text())
        jsonschema.validate(doc, schema(name))
        return doc

    def validate_manifest(self, directory, subcommand):
        manifest = self.validate(directory / f"{subcommand}-manifest.json", "manifest")
        self.assertEqual(manifest["subcommand"], subcommand)
        for output in manifest["outputs"]:
            self.assertTrue((directory / output).is_file(), output)
        return manifest

    def test_version(self):
        result = run("--version")
        self.check(result, 0)
        self.assertRegex(result.stdout, r"\d+\.\d+\.\d+")

    def test_decompose(self):
        d = self.out("d")
        self.check(run("-o", d, "decompose", "-a", "tanh", "-N", "12"), 0)
        doc = self.validate(d / "decompose.json", "decompose")
        self.assertEqual(doc["classification"], "ZeroMeanNonlinear")
        self.assertEqual(len(doc["coefficients"]), 13)
        self.validate_manifest(d, "decompose")

    def test_decompose_from_spec_file(self):
        spec = self.tmp / "steep.json"
        spec.write_text(json.dumps({"kind": "tanh", "scale": 2.0, "id": "steep"}))
        d = self.out("d")
        self.check(run("-o", d, "decompose", "-a", spec), 0)
        self.assertEqual(self.validate(d / "decompose.json", "decompose")["activation"]["id"],
                         "steep")

    def test_unknown_activation_is_a_validation_error(self):
        result = run("-o", self.out("d"), "decompose", "-a", "softsign")
        self.check(result, 1)
        self.assertIn("softsign", result.stderr)

    def test_bad_arguments_exit_one(self):
        self.check(run("decompose", "-N", "2"), 1)
        self.check(run("frobnicate"), 1)
        self.check(run("conjecture", "-n", "6", "-m", "4"), 1)

    def test_flow(self):
        for name, expected in [("tanh", "DecaysToZero"), ("relu", "DegenerateToOne"),
                               ("gelu", "ConvergesPositive")]:
            d = self.out(name)
            self.check(run("-o", d, "flow", "-a", name, "--k0", "0.3", "-L", "20"), 0)
            doc = self.validate(d / "flow_report.json", "flow_report")
            self.assertEqual(doc["classification"], expected)
            lines = (d / "flow_trajectory.csv").read_text().splitlines()
            self.assertTrue(lines[0].startswith("# manifest:"))
            self.assertEqual(lines[1], "layer,k")
            self.assertEqual(len(lines), 2 + 21)
            self.validate_manifest(d, "flow")

    def test_flow_linear_activation_is_rejected(self):
        d = self.out("d")
        self.check(run("-o", d, "flow", "-a", "identity"), 1)

    def test_figure1(self):
        d = self.out("d")
        self.check(run("-o", d, "figure1", "--grid", "11"), 0)
        for name in ["relu", "tanh4x", "relu_shifted"]:
            lines = (d / f"figure1_{name}.csv").read_text().splitlines()
            self.assertEqual(lines[1], "k_in,k_out,diagonal")
            self.assertEqual(len(lines), 2 + 11)
        self.validate_manifest(d, "figure1")

    def test_simulate_identity(self):
        d = self.out("d")
        result = run("-o", d, "simulate", "-c", CONFIGS / "identity_depth1.json",
                     "--seed", "3", "-s", "400", "-j", "2")
        self.check(result, 0)
        doc = self.validate(d / "simulate.json", "simulate")
        self.assertEqual(doc["network"]["seed"], 3)
        self.assertLess(doc["covariance"]["max_abs_z"], 6.0)
        self.validate_manifest(d, "simulate")

    def test_simulate_with_four_point(self):
        d = self.out("d")
        result = run("-o", d, "simulate", "-c", CONFIGS / "four_point_tanh.json",
                     "--seed", "1", "-s", "400", "--four-point-width", "512")
        self.check(result, 0)
        doc = self.validate(d / "simulate.json", "simulate")
        self.assertIn("kurtosis", doc)
        four = self.validate(d / "four_point.json", "four_point")
        self.assertEqual(four["wide"]["width"], 512)

    def test_simulate_rejects_unnormalized_rows(self):
        config = json.loads((CONFIGS / "identity_depth1.json").read_text())
        config["dataset"]["inputs"][1] = [3.0] * len(config["dataset"]["inputs"][1])
        path = self.tmp / "bad.json"
        path.write_text(json.dumps(config))
        result = run("-o", self.out("d"), "simulate", "-c", path, "--seed", "1", "-s", "200")
        self.check(result, 1)
        self.assertIn("row 1", result.stderr)

    def test_simulate_rejects_malformed_json(self):
        path = self.tmp / "broken.json"
        path.write_text('{"network": ')
        self.check(run("-o", self.out("d"), "simulate", "-c", path, "--seed", "1"), 1)

    def test_conjecture(self):
        d = self.out("d")
        result = run("-o", d, "conjecture", "-n", "6", "-m", "16", "-t", "400", "--seed", "9")
        self.check(result, 0)
        doc = self.validate(d / "conjecture.json", "conjecture")
        self.assertEqual(doc["independence_prediction"], 16 / 64)
        self.assertFalse(doc["underpowered"])
        self.validate_manifest(d, "conjecture")

    def test_underpowered_conjecture_exits_two(self):
        d = self.out("d")
        result = run("-o", d, "conjecture", "-n", "20", "-m", "1", "-t", "100", "--seed", "1")
        self.check(result, 2)
        self.assertTrue(self.validate(d / "conjecture.json", "conjecture")["underpowered"])

    def test_rerun_reproduces_outputs(self):
        first = self.out("first")
        self.check(run("-o", first, "simulate", "-c", CONFIGS / "identity_depth1.json",
                       "--seed", "11", "-s", "300", "-j", "1"), 0)
        second = self.out("second")
        self.check(run("-o", second, "rerun", first / "simulate-manifest.json", "-j", "3"), 0)
        cmp = filecmp.dircmp(first, second)
        self.assertEqual(cmp.left_only + cmp.right_only + cmp.diff_files, [])

    def test_worker_count_does_not_change_outputs(self):
        dirs = []
        for workers in ["1", "4"]:
            d = self.out(f"w{workers}")
            self.check(run("-o", d, "conjecture", "-n", "6", "-m", "8", "-t", "300",
                           "--seed", "5", "-j", workers), 0)
            dirs.append(d)
        cmp = filecmp.dircmp(*dirs)
        self.assertEqual(cmp.left_only + cmp.right_only + cmp.diff_files, [])


if __name__ == "__main__":
    unittest.main()
