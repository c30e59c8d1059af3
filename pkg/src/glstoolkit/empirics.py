"""Moments, tails and rearrangements of samples and step functions.

A sample is treated as an exact discrete distribution on a probability
space, never as a draw from some other law.
"""

import json
import math
import numpy as np
from scipy.integrate import quad
from glstoolkit.psi import Tabulated
from glstoolkit.exceptions import PreconditionError, DomainError, InvalidFunctionError, \
    IncompatibleGridError


class EmpiricalSample:
    """A finite collection of values with probability weights.
    """

    def __init__(self, values, weights=None):
        """Initializes the sample.

        :param values: The finite values.
        :type values: array_like
        :param weights: Positive weights summing to 1. Defaults to uniform.
        :type weights: array_like, optional
        """
        values = np.array(values, dtype=float).ravel()
        if len(values) == 0:
            raise PreconditionError('a sample needs at least one value')
        if not np.all(np.isfinite(values)):
            raise PreconditionError('sample values must be finite')
        if weights is None:
            weights = np.full(len(values), 1./len(values))
        else:
            weights = np.array(weights, dtype=float).ravel()
            if weights.shape != values.shape:
                raise PreconditionError('got {} weights for {} values'.format(len(weights), len(values)))
            if not np.all(weights > 0) or not np.all(np.isfinite(weights)):
                raise PreconditionError('sample weights must be positive and finite')
            if abs(weights.sum() - 1.) > 1e-12:
                raise PreconditionError('sample weights must sum to 1, got {:.15g}'.format(weights.sum()))
        values.flags.writeable = False
        weights.flags.writeable = False
        self.values = values
        self.weights = weights


    def __len__(self):
        return len(self.values)


    def __sub__(self, other):
        """Returns the pointwise difference of two samples on the same probability grid.
        """
        if len(self) != len(other) or not np.array_equal(self.weights, other.weights):
            raise IncompatibleGridError('samples do not share a probability grid')
        return EmpiricalSample(self.values - other.values, self.weights)


    def scaled(self, factor):
        return EmpiricalSample(self.values*float(factor), self.weights)


    @classmethod
    def from_step_function(cls, breaks, values):
        """Builds the sample induced by a step function on [0, 1].

        :param breaks: The increasing breakpoints, from 0 to 1.
        :type breaks: array_like
        :param values: The value on each step; one fewer than the breakpoints.
        :type values: array_like
        :return: The sample with weights equal to the step widths.
        :rtype: EmpiricalSample
        """
        breaks = np.asarray(breaks, dtype=float)
        if len(breaks) < 2 or breaks[0] != 0 or breaks[-1] != 1:
            raise PreconditionError('step breakpoints must run from 0 to 1')
        widths = np.diff(breaks)
        if np.any(widths <= 0):
            raise PreconditionError('step breakpoints must be strictly increasing')
        return cls(values, widths/widths.sum())


    @classmethod
    def from_csv(cls, path):
        """Loads a sample from a CSV file with one value per line and an optional weight column.

        Weights are divided by their sum.
        """
        try:
            data = np.loadtxt(path, delimiter=',', ndmin=2, comments='#')
        except (OSError, ValueError) as e:
            raise PreconditionError('could not read numeric columns from {}: {}'.format(path, e))
        if data.size == 0:
            raise PreconditionError('{} contains no values'.format(path))
        if data.shape[1] == 1:
            return cls(data[:, 0])
        if data.shape[1] == 2:
            return cls(data[:, 0], data[:, 1]/data[:, 1].sum())
        raise PreconditionError('{} must have one or two columns, found {}'.format(path, data.shape[1]))


    @classmethod
    def from_json(cls, path):
        """Loads a sample from a JSON array, or an object with "values" and optional "weights".
        """
        try:
            with open(path, 'r') as f:
                data = json.load(f)
        except (OSError, ValueError) as e:
            raise PreconditionError('could not read JSON from {}: {}'.format(path, e))
        weights = None
        if isinstance(data, dict):
            if 'values' not in data:
                raise PreconditionError('{} must contain a "values" array'.format(path))
            weights, data = data.get('weights'), data['values']
        try:
            values = np.asarray(data, dtype=float)
            if weights is not None:
                weights = np.asarray(weights, dtype=float)
                weights = weights/weights.sum()
        except (TypeError, ValueError) as e:
            raise PreconditionError('{} must hold numeric values and weights: {}'.format(path, e))
        return cls(values, weights)


    @classmethod
    def load(cls, path):
        if str(path).endswith('.json'):
            return cls.from_json(path)
        return cls.from_csv(path)


class MomentProfile:
    """The L_p norms of one function on a p-grid.
    """

    def __init__(self, grid, norms):
        grid = np.array(grid, dtype=float)
        norms = np.array(norms, dtype=float)
        if grid.ndim != 1 or grid.shape != norms.shape or len(grid) == 0:
            raise PreconditionError('profile grid and norms must be nonempty 1-d arrays of equal length')
        if grid[0] < 1 or np.any(np.diff(grid) <= 0):
            raise DomainError('profile grid must be strictly increasing within [1, inf)')
        if np.any(norms < 0) or np.any(np.isnan(norms)):
            raise InvalidFunctionError('profile norms must be nonnegative')
        if np.any(np.diff(norms) < -1e-12*norms[1:]):
            raise InvalidFunctionError('profile norms must be nondecreasing in p')
        grid.flags.writeable = False
        norms.flags.writeable = False
        self.grid = grid
        self.norms = norms


    def scaled(self, factor):
        return MomentProfile(self.grid, self.norms*float(factor))


class NormReport:
    """A grid estimate of a Grand Lebesgue norm and the exponent attaining it.
    """

    def __init__(self, value, p, at_grid_edge):
        self.value = float(value)
        self.p = float(p)
        self.at_grid_edge = bool(at_grid_edge)


    def __float__(self):
        return self.value


    def to_dict(self):
        return {'value': self.value, 'p': self.p, 'at_grid_edge': self.at_grid_edge}


def lp_norm(sample, p):
    """Computes (sum_i w_i |x_i|^p)^(1/p); p may be inf.

    :param sample: The sample.
    :type sample: EmpiricalSample
    :param p: The exponent, at least 1.
    :type p: float
    :return: The norm.
    :rtype: float
    """
    p = float(p)
    if not p >= 1:
        raise DomainError('L_p norms need p >= 1, got p={}'.format(p))
    x = np.abs(sample.values)
    peak = x.max()
    if peak == 0:
        return 0.
    if math.isinf(p):
        return float(peak)
    return float(peak*np.sum(sample.weights*(x/peak)**p)**(1./p))


def moment_profile(sample, grid):
    """Tabulates lp_norm on a p-grid.

    Rounding-level decreases between neighbouring nodes are removed so that
    the profile is exactly nondecreasing.

    :param sample: The sample.
    :type sample: EmpiricalSample
    :param grid: The increasing p-grid within [1, inf).
    :type grid: array_like
    :return: The profile.
    :rtype: MomentProfile
    """
    grid = np.asarray(grid, dtype=float)
    norms = np.array([lp_norm(sample, p) for p in grid])
    return MomentProfile(grid, np.maximum.accumulate(norms))


def gls_norm(profile, psi):
    """Estimates ||f|| = sup_p |f|_p / psi(p) over the profile grid.

    The grid maximum is a lower bound of the supremum. The report flags a
    maximum at the last node, where truncation of the grid may bias it.

    :param profile: The moment profile.
    :type profile: MomentProfile
    :param psi: The generating function; must be defined on the whole grid.
    :type psi: glstoolkit.psi.GeneratingFunction
    :return: The norm, the attaining p and the grid-edge flag.
    :rtype: NormReport
    """
    ratios = profile.norms/psi.evaluate(profile.grid)
    index = int(np.argmax(ratios))
    return NormReport(ratios[index], profile.grid[index], index == len(ratios) - 1 and ratios[index] > 0)


def natural_function(profiles, b=np.inf):
    """Builds the natural generating function of a family of random variables.

    The pointwise maximum of the profiles is tabulated and normalized; the
    unnormalized envelope is ``result.with_scale(1)``.

    :param profiles: The moment profiles, all on one grid.
    :type profiles: list
    :param b: The support bound of the result.
    :type b: float, optional
    :return: The normalized tabulated function.
    :rtype: glstoolkit.psi.Tabulated
    """
    profiles = list(profiles)
    if not profiles:
        raise PreconditionError('natural_function needs at least one profile')
    grid = profiles[0].grid
    for profile in profiles[1:]:
        if not np.array_equal(profile.grid, grid):
            raise IncompatibleGridError('all profiles must share one p-grid')
    envelope = np.max([profile.norms for profile in profiles], axis=0)
    return Tabulated(grid, envelope, b).normalized()


def empirical_tail(sample, y, definition='two_sided'):
    """Evaluates the tail function of a sample.

    By default this is T(y) = max(mu(f >= y), mu(f <= -y)), ties included.
    With ``definition='absolute'`` it is mu(|f| >= y), the tail entering the
    moment identity; the two agree for y > 0 whenever only one sign carries
    mass at or beyond y.

    :param sample: The sample.
    :type sample: EmpiricalSample
    :param y: The level(s), nonnegative.
    :type y: float or numpy.ndarray
    :param definition: Either 'two_sided' or 'absolute'.
    :type definition: str, optional
    :return: The tail probability.
    :rtype: float or numpy.ndarray
    """
    levels = np.asarray(y, dtype=float)
    if np.any(levels < 0) or np.any(np.isnan(levels)):
        raise DomainError('tail levels must satisfy y >= 0')
    x, w = sample.values[:, None], sample.weights[:, None]
    flat = levels.reshape(1, -1)
    if definition == 'absolute':
        tail = np.sum(w*(np.abs(x) >= flat), axis=0)
    elif definition == 'two_sided':
        tail = np.maximum(np.sum(w*(x >= flat), axis=0), np.sum(w*(x <= -flat), axis=0))
    else:
        raise PreconditionError("definition must be 'two_sided' or 'absolute', got {!r}".format(definition))
    tail = np.minimum(tail, 1.)
    if levels.ndim == 0:
        return float(tail[0])
    return tail.reshape(levels.shape)


class RearrangementPair:
    """The decreasing rearrangement f° and its running average f°° as step data.

    Step k covers [breaks[k], breaks[k+1]) with height heights[k]; the
    heights are nonincreasing.
    """

    def __init__(self, breaks, heights):
        self.breaks = breaks
        self.heights = heights
        # integral of f° from 0 to each breakpoint
        self.cumulative = np.concatenate([[0.], np.cumsum(heights*np.diff(breaks))])


    def _locate(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0) or np.any(t > 1):
            raise DomainError('rearrangements are evaluated on (0, 1]')
        return t, np.clip(np.searchsorted(self.breaks, t, side='right') - 1, 0, len(self.heights) - 1)


    def decreasing(self, t):
        """Evaluates f°(t) for t in (0, 1].
        """
        t, k = self._locate(t)
        values = self.heights[k]
        return float(values) if values.ndim == 0 else values


    def maximal(self, t):
        """Evaluates f°°(t) = (1/t) int_0^t f°(s) ds for t in (0, 1].
        """
        t, k = self._locate(t)
        values = (self.cumulative[k] + self.heights[k]*(t - self.breaks[k]))/t
        return float(values) if values.ndim == 0 else values


    def lp_norm(self, p):
        """Computes |f°|_p, which equals |f|_p.
        """
        return lp_norm(EmpiricalSample(self.heights, np.diff(self.breaks)/np.diff(self.breaks).sum()), p)


def rearrange(sample):
    """Computes the decreasing rearrangement of a sample or step function.

    :param sample: The sample; each value occupies a step of width equal to its weight.
    :type sample: EmpiricalSample
    :return: The rearrangement pair.
    :rtype: RearrangementPair
    """
    order = np.argsort(-np.abs(sample.values), kind='stable')
    heights = np.abs(sample.values)[order]
    breaks = np.concatenate([[0.], np.cumsum(sample.weights[order])])
    breaks[-1] = 1.
    return RearrangementPair(breaks, heights)


def h_norm(pair, p):
    """Computes the H(L_p) norm |f°°|_p by quadrature on each step.

    On step k, f°°(t) = a_k + c_k/t with c_k >= 0, so each piece is smooth.

    :param pair: The rearrangement.
    :type pair: RearrangementPair
    :param p: The exponent, at least 1.
    :type p: float
    :return: The norm.
    :rtype: float
    """
    p = float(p)
    if not p >= 1:
        raise DomainError('H(L_p) norms need p >= 1, got p={}'.format(p))
    if pair.heights[0] == 0:
        return 0.
    if math.isinf(p):
        return float(pair.heights[0])
    scale = pair.heights[0]
    total = 0.
    for k, a in enumerate(pair.heights):
        lo, hi = pair.breaks[k], pair.breaks[k + 1]
        c = pair.cumulative[k] - a*lo
        if c <= 0:
            total += (a/scale)**p*(hi - lo)
            continue
        total += quad(lambda t: ((a + c/t)/scale)**p, lo, hi, epsabs=0., epsrel=1e-13)[0]
    return float(scale*total**(1./p))


def tail_moment_identity_residual(sample, p):
    """Compares |f|_p^p with p int_0^inf y^(p-1) T(y) dy for T(y) = mu(|f| >= y).

    The tail is a step function, so the integral is the exact telescoping sum
    of S_k (a_k^p - a_(k-1)^p) over the sorted distinct levels a_k.

    :param sample: The sample.
    :type sample: EmpiricalSample
    :param p: The exponent, at least 1.
    :type p: float
    :return: The relative difference of the two sides.
    :rtype: float
    """
    p = float(p)
    if not p >= 1 or math.isinf(p):
        raise DomainError('the identity needs 1 <= p < inf, got p={}'.format(p))
    x = np.abs(sample.values)
    peak = x.max()
    if peak == 0:
        return 0.
    x = x/peak
    moment = float(np.sum(sample.weights*x**p))
    levels, inverse = np.unique(x, return_inverse=True)
    mass = np.bincount(inverse, weights=sample.weights)
    survival = np.cumsum(mass[::-1])[::-1]
    previous = np.concatenate([[0.], levels[:-1]])
    integral = float(np.sum(survival*(levels**p - previous**p)))
    return abs(moment - integral)/moment
