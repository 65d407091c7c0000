"""Stabilized leapfrog local time-stepping (LF-LTS) for the 1D wave equation.

Modules: :mod:`~lflts.chebstab` (Chebyshev constants and polynomials),
:mod:`~lflts.mesh` (locally refined meshes), :mod:`~lflts.femspace`
(mass-lumped P1/P2 elements), :mod:`~lflts.integrators` (time steppers and
two-step oracle), :mod:`~lflts.experiments` (scenarios and convergence
studies) and :mod:`~lflts.cli`.
"""

from .chebstab import ChebCoeffs, boundsLemmaA1, chebT, chebU, coefficients, evalPDeltaT, evalQDeltaT
from .experiments import (Scenario, convergenceStudy, get_scenario, referenceSolution,
                          scenarioConstantSolution, scenarioGaussianPulse, scenarioShiftedFine)
from .femspace import FeSpace, applyA, assemble, errorNorms, loadVector, mapCoarse, mapFine
from .integrators import (IntegratorConfig, LtsState, run, stabilityScan, stepLFLTS,
                          stepPlainLF, stepSplitLFC, twoStepOracle)
from .mesh import Mesh1D, RegionSpec, buildLocallyRefined, etaWeights, fineLayers

__version__ = "0.1.0"
