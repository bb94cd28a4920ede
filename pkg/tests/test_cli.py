import json
import unittest
import sys
import os

from typer.testing import CliRunner

# Change the working directory to the parent directory to allow importing the hdvikit package.
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
from hdvikit.hdvikit_cli import app
from tests.utils import data_path, scenario_path, temporary_directory


class TestCLI(unittest.TestCase):
    """
    Unit tests for the command line interface.
    Methods:
    - setUpClass: Prints a message before any tests are run.
    - setUp: Creates the CliRunner.
    - test_validate: A valid scenario exits 0 and prints its summary.
    - test_validate_malformed: A malformed kernel exits 3 and names the field.
    - test_run_broken_syntax: A syntax error exits 2 and writes error.json.
    - test_run_bad_channel: A control channel without a DOF exits 3 and writes error.json.
    - test_constants_json: The rod constants as JSON.
    - test_run_out: --out and --steps control the output directory and grid.
    - test_run_env_out: HDVIKIT_OUT_DIR is used when --out is absent.
    - test_no_args: Prints the help.
    """
    @classmethod
    def setUpClass(cls):
        print("\nTesting CLI", end="", flush=True)

    def setUp(self):
        self.runner = CliRunner()

    def test_validate(self):
        result = self.runner.invoke(app, ['validate', scenario_path('two_dof_compliance.json')])
        self.assertEqual(result.exit_code, 0, msg=result.output)
        self.assertIn('two_dof_compliance', result.output)
        self.assertIn('is valid', result.output)

    def test_validate_malformed(self):
        result = self.runner.invoke(app, ['validate', data_path('malformed_kernel.json')])
        self.assertEqual(result.exit_code, 3)
        self.assertIn('problem.kernel', result.output)

    def test_run_broken_syntax(self):
        with temporary_directory() as out:
            result = self.runner.invoke(app, ['run', data_path('broken_syntax.json'), '--out', out])
            self.assertEqual(result.exit_code, 2)
            with open(os.path.join(out, 'error.json')) as f:
                error = json.load(f)
        self.assertEqual(error['error'], 'ParseError')
        self.assertEqual(error['details']['line'], 4)

    def test_run_bad_channel(self):
        with open(scenario_path('rod_control.json')) as f:
            document = json.load(f)
        document['control']['channels'] = [{'weight': 1.0, 'kind': 'traction'}]
        with temporary_directory() as folder:
            path = os.path.join(folder, 'bad_channel.json')
            with open(path, 'w') as f:
                json.dump(document, f)
            out = os.path.join(folder, 'out')
            result = self.runner.invoke(app, ['run', path, '--out', out])
            self.assertEqual(result.exit_code, 3, msg=result.output)
            self.assertIn('control.channels[0].dof', result.output)
            with open(os.path.join(out, 'error.json')) as f:
                error = json.load(f)
            with open(os.path.join(out, 'manifest.json')) as f:
                manifest = json.load(f)
        self.assertEqual(error['error'], 'ValidationError')
        self.assertEqual(manifest['status'], 'failed')

    def test_constants_json(self):
        result = self.runner.invoke(app, ['constants', scenario_path('rod_control.json'), '--json'])
        self.assertEqual(result.exit_code, 0, msg=result.output)
        values = json.loads(result.output)
        self.assertAlmostEqual(values['m_B'], 1.0, places=8)
        self.assertAlmostEqual(values['c'], 1.0, places=8)
        self.assertAlmostEqual(values['K'], 2.718281828459045, places=6)
        self.assertEqual(values['concatenation_windows'], 3)

    def test_run_out(self):
        with temporary_directory() as out:
            result = self.runner.invoke(app, ['run', scenario_path('rod_forward.json'), '--out', out, '--steps', '10'])
            self.assertEqual(result.exit_code, 0, msg=result.output)
            with open(os.path.join(out, 'trajectory.csv')) as f:
                lines = f.read().splitlines()
            with open(os.path.join(out, 'manifest.json')) as f:
                manifest = json.load(f)
        self.assertEqual(len(lines), 12)
        self.assertTrue(lines[0].startswith('node,t_seconds,u_0'))
        self.assertEqual(manifest['status'], 'ok')
        self.assertIn('max_vi_residual', result.output)

    def test_run_env_out(self):
        with temporary_directory() as out:
            target = os.path.join(out, 'env_run')
            result = self.runner.invoke(app, ['run', scenario_path('rod_picard.json'), '--steps', '10'],
                                        env={'HDVIKIT_OUT_DIR': target})
            self.assertEqual(result.exit_code, 0, msg=result.output)
            self.assertTrue(os.path.exists(os.path.join(target, 'manifest.json')))
            self.assertTrue(os.path.exists(os.path.join(target, 'picard_sweeps.csv')))

    def test_no_args(self):
        result = self.runner.invoke(app, [])
        self.assertIn('run', result.output)
        self.assertIn('validate', result.output)


if __name__ == '__main__':
    unittest.main()
