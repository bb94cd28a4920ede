import sys
import os
import shutil
import tempfile
from contextlib import contextmanager

import numpy as np

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
from hdvikit.algebra import TimeGrid
from hdvikit.model import (ComplianceLaw, ConstraintSet, DiscreteSpace, HdviProblem, LoadHistory,
                           RelaxationKernel, build_rod_example)

SCENARIO_DIR = os.path.abspath(os.path.join(os.path.dirname(__file__), '..', 'scenarios'))
DATA_DIR = os.path.abspath(os.path.join(os.path.dirname(__file__), 'data'))


@contextmanager
def suppress_print():
    """
    A context manager that suppresses all print statements within its block.
    Standard output is redirected to os.devnull and restored on exit.
    Usage:
        with suppress_print():
            # Any print statements here will be suppressed
    Yields:
        None
    """
    with open(os.devnull, 'w') as devnull:
        old_stdout = sys.stdout
        sys.stdout = devnull
        try:
            yield
        finally:
            sys.stdout = old_stdout


@contextmanager
def temporary_directory():
    """Yields a fresh directory that is removed afterwards."""
    path = tempfile.mkdtemp(prefix='hdvikit_test_')
    try:
        yield path
    finally:
        shutil.rmtree(path, ignore_errors=True)


def rod_problem(n_elements=4, steps=10, t_end=1.0, **kwargs):
    """Rod example on a uniform grid."""
    return build_rod_example(n_elements, TimeGrid(t_end, steps), **kwargs)


def random_problem(seed, n_dof=4, steps=10, bounded=2, compliance=True, t_end=1.0):
    """
    Small random problem with a coercive stiffness, an exponential kernel,
    optional normal compliance on the last DOF and up to ``bounded`` constrained DOFs.
    """
    rng = np.random.default_rng(seed)
    grid = TimeGrid(t_end, steps)
    D = np.eye(n_dof) + 0.1 * rng.standard_normal((n_dof, n_dof))
    q = np.ones(n_dof)
    space = DiscreteSpace(D, q)
    noise = 0.1 * rng.standard_normal((n_dof, n_dof))
    B = np.eye(n_dof) + 0.5 * (noise + noise.T)
    kernel = RelaxationKernel.exponential(0.3 * rng.standard_normal((n_dof, n_dof)), 1.0, grid, q)
    law = ComplianceLaw(n_dof, [n_dof - 1], [2.0]) if compliance else ComplianceLaw.none(n_dof)
    dofs = rng.choice(n_dof, size=bounded, replace=False) if bounded else []
    constraints = ConstraintSet(n_dof, [(int(i), float(rng.uniform(0.05, 0.3))) for i in dofs])
    load = LoadHistory([0.0, t_end], rng.standard_normal((2, n_dof)))
    return HdviProblem(space, B, kernel, law, constraints, load, grid, name=f'random_{seed}')


def scenario_path(name):
    return os.path.join(SCENARIO_DIR, name)


def data_path(name):
    return os.path.join(DATA_DIR, name)
