import unittest
import sys
import os

# Change the working directory to the parent directory to allow importing the hdvikit package.
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from hdvikit.algebra import TimeGrid as tg
from hdvikit.model import HdviProblem as hp
from hdvikit.model import RelaxationKernel as rk
from hdvikit.evi import EviSolver as es
from hdvikit.hdvi import HistorySolver as hs
from hdvikit.sensitivity import SensitivitySolver as ss
from hdvikit.control import ControlProblem as cp
from hdvikit.wellposed import WellPosedness as wp
from hdvikit.storage import Storage as s
from hdvikit.scenario import Scenario as sc
from hdvikit.runner import Runner as rn
from hdvikit.errors import HdviError as he
from hdvikit.options import SolverOptions as so
from hdvikit.parallel import parallel_map as pm

from hdvikit import *
import hdvikit


class TestImports(unittest.TestCase):
    """
    Tests that the hdvikit package can be imported.
    Methods:
    - setUpClass: Prints a message before any tests are run.
    - test_individual_imports: Tests that each module in the hdvikit package can be imported individually.
    - test_wildcard_import: Tests that the hdvikit package can be imported using a wildcard import.
    - test_all_names: Every name in __all__ resolves.
    """
    @classmethod
    def setUpClass(cls):
        print("\nTesting Imports", end="", flush=True)

    def test_individual_imports(self):
        assert tg is not None
        assert hp is not None
        assert rk is not None
        assert es is not None
        assert hs is not None
        assert ss is not None
        assert cp is not None
        assert wp is not None
        assert s is not None
        assert sc is not None
        assert rn is not None
        assert he is not None
        assert so is not None
        assert pm is not None

    def test_wildcard_import(self):
        assert HistorySolver is not None
        assert SensitivitySolver is not None
        assert ControlProblem is not None
        assert WellPosedness is not None
        assert Scenario is not None
        assert Runner is not None

    def test_all_names(self):
        for name in hdvikit.__all__:
            self.assertTrue(hasattr(hdvikit, name), msg=name)


if __name__ == '__main__':
    unittest.main()
