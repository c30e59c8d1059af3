"""Young-Fenchel transforms and the tail side of Grand Lebesgue norms.

The bridge between moments and tails is v(p) = p ln psi(p): a function with
finite Grand Lebesgue norm ||f|| has tails below exp(-v*(ln(y/||f||))) for
y >= e ||f||, where v* is the Young-Fenchel transform of v.
"""

import math
import numpy as np
from scipy.integrate import quad
from glstoolkit import utils
from glstoolkit.numerics import golden_section
from glstoolkit.psi import PsiM, PsiBBeta, PsiBGammaL, Degenerate
from glstoolkit.exceptions import PreconditionError, InvalidFunctionError, OutOfValidityError, \
    UnboundedMomentError, NoClosedFormError

# relative shortfall below e*||f|| still accepted as the threshold itself
VALIDITY_RTOL = 1e-6


class ConvexGridFunction:
    """A function tabulated on an increasing grid, optionally backed by an exact evaluator.

    The evaluator, when present, is used to refine suprema between grid nodes;
    without it the function is taken to be piecewise linear.
    """

    def __init__(self, grid, values, evaluator=None, check=False):
        """Initializes the tabulated function.

        :param grid: The strictly increasing nodes.
        :type grid: array_like
        :param values: The finite values at the nodes.
        :type values: array_like
        :param evaluator: The exact scalar function the values were taken from.
        :type evaluator: callable, optional
        :param check: If True, the values must be discretely convex.
        :type check: bool, optional
        """
        grid = np.array(grid, dtype=float)
        values = np.array(values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or len(grid) == 0:
            raise PreconditionError('grid and values must be nonempty 1-d arrays of equal length')
        if np.any(np.diff(grid) <= 0):
            raise PreconditionError('grid must be strictly increasing')
        if not np.all(np.isfinite(values)):
            raise InvalidFunctionError('convex grid function values must be finite')
        grid.flags.writeable = False
        values.flags.writeable = False
        self.grid = grid
        self.values = values
        self.evaluator = evaluator
        if check and not self.is_convex():
            raise InvalidFunctionError('values declared convex have negative second differences')


    @classmethod
    def from_callable(cls, func, grid, check=False):
        """Tabulates a scalar function on a grid and keeps it for refinement.

        :param func: The function; must accept numpy arrays.
        :type func: callable
        :param grid: The nodes.
        :type grid: array_like
        :param check: Whether to require discrete convexity.
        :type check: bool, optional
        :return: The tabulated function.
        :rtype: ConvexGridFunction
        """
        grid = np.asarray(grid, dtype=float)
        return cls(grid, func(grid), evaluator=func, check=check)


    def is_convex(self, tol=1e-9):
        """Checks that the slopes between consecutive nodes are nondecreasing.
        """
        if len(self.grid) < 3:
            return True
        slopes = np.diff(self.values)/np.diff(self.grid)
        return bool(np.all(np.diff(slopes) >= -tol*np.maximum(1., np.abs(slopes[1:]))))


    def conjugate(self, u_grid):
        """Tabulates the Young-Fenchel transform on a grid of slopes.

        The result is convex and carries fenchel(self, .) as its evaluator, so
        conjugating it again yields the double conjugate.

        :param u_grid: The slopes.
        :type u_grid: array_like
        :return: The tabulated transform.
        :rtype: ConvexGridFunction
        """
        u_grid = np.asarray(u_grid, dtype=float)
        values = np.array([fenchel(self, u) for u in u_grid])
        return ConvexGridFunction(u_grid, values, evaluator=lambda u: fenchel(self, u))


def fenchel(f, u, tol=utils.REFINEMENT_TOL):
    """Evaluates the Young-Fenchel transform f*(u) = sup_x (x u - f(x)).

    The supremum is taken over the grid nodes and refined by one
    golden-section pass between the neighbours of the best node.

    :param f: The function.
    :type f: ConvexGridFunction
    :param u: The slope.
    :type u: float
    :param tol: The refinement tolerance.
    :type tol: float, optional
    :return: The transform at u.
    :rtype: float
    """
    u = float(u)
    objective = f.grid*u - f.values
    index = int(np.argmax(objective))
    best = float(objective[index])
    if f.evaluator is None or len(f.grid) == 1:
        return best
    lo = f.grid[max(index - 1, 0)]
    hi = f.grid[min(index + 1, len(f.grid) - 1)]
    x, neg = golden_section(lambda x: float(f.evaluator(x)) - x*u, lo, hi, tol=tol)
    return max(best, -neg)


def v_grid_function(psi, grid=None):
    """Tabulates v(p) = p ln psi(p) on the grid of psi.

    :param psi: The generating function.
    :type psi: glstoolkit.psi.GeneratingFunction
    :param grid: The p-grid. Defaults to psi.grid().
    :type grid: numpy.ndarray, optional
    :return: The tabulated v with psi.v as evaluator.
    :rtype: ConvexGridFunction
    """
    grid = psi.grid() if grid is None else grid
    return ConvexGridFunction.from_callable(psi.v, grid)


class TailEnvelope:
    """An upper bound y -> T(y) on a tail function, with values in [0, 1].

    Below the validity threshold ``y_min`` the envelope is the trivial bound 1.
    """

    def __init__(self, evaluator, y_min=0., log_evaluator=None, validate=True):
        """Initializes the envelope.

        :param evaluator: A scalar function y -> bound, used for y >= y_min.
        :type evaluator: callable
        :param y_min: The validity threshold.
        :type y_min: float, optional
        :param log_evaluator: The logarithm of the evaluator, if it can be computed without underflow.
        :type log_evaluator: callable, optional
        :param validate: Whether to check monotonicity and range on a grid.
        :type validate: bool, optional
        """
        y_min = float(y_min)
        if not (y_min >= 0 and math.isfinite(y_min)):
            raise PreconditionError('validity threshold must satisfy 0 <= y_min < inf, got {}'.format(y_min))
        self.y_min = y_min
        self.evaluator = evaluator
        self.log_evaluator = log_evaluator
        if validate:
            self.validate()


    def __call__(self, y):
        if np.ndim(y):
            return np.array([self(v) for v in np.asarray(y, dtype=float).flat]).reshape(np.shape(y))
        y = float(y)
        if y < self.y_min:
            return 1.
        return min(1., max(0., float(self.evaluator(y))))


    def log(self, y):
        """Evaluates the logarithm of the envelope (-inf where it vanishes).
        """
        if np.ndim(y):
            return np.array([self.log(v) for v in np.asarray(y, dtype=float).flat]).reshape(np.shape(y))
        y = float(y)
        if y < self.y_min:
            return 0.
        if self.log_evaluator is not None:
            return min(0., float(self.log_evaluator(y)))
        value = self(y)
        return math.log(value) if value > 0 else -math.inf


    def validate(self, grid=None):
        """Checks that the envelope is nonincreasing with values in [0, 1].

        :param grid: The points to check. Defaults to 64 points above y_min.
        :type grid: numpy.ndarray, optional
        """
        if grid is None:
            start = max(self.y_min, 1e-3)
            grid = np.geomspace(start, start*1e3, 64)
        raw = np.array([float(self.evaluator(y)) for y in grid])
        if np.any(np.isnan(raw)) or np.any(raw < 0):
            raise InvalidFunctionError('tail envelope takes negative or undefined values')
        values = np.minimum(raw, 1.)
        if np.any(np.diff(values) > 1e-12):
            raise InvalidFunctionError('tail envelope must be nonincreasing on [y_min, inf)')


    @classmethod
    def from_callable(cls, func, y_min=0.):
        """Wraps a scalar function as a tail envelope.
        """
        return cls(func, y_min=y_min)


    @classmethod
    def from_generating_function(cls, psi, norm=1.):
        """Builds the envelope exp(-v*(ln(y/norm))), valid for y >= e norm.

        :param psi: The generating function.
        :type psi: glstoolkit.psi.GeneratingFunction
        :param norm: The Grand Lebesgue norm of the function being bounded.
        :type norm: float, optional
        :return: The envelope.
        :rtype: TailEnvelope
        """
        norm = float(norm)
        if not (norm > 0 and math.isfinite(norm)):
            raise PreconditionError('norm must be positive and finite, got {}'.format(norm))
        v = v_grid_function(psi)
        def log_bound(y):
            return -fenchel(v, math.log(y/norm))
        return cls(lambda y: math.exp(log_bound(y)), y_min=math.e*norm, log_evaluator=log_bound)


    @classmethod
    def reference(cls, psi):
        """Returns the reference tail shape that accompanies a named family.

        PsiM(m) pairs with exp(-y^m); Degenerate(r) with y^-r; PsiBBeta(b, beta)
        with y^-b (ln y)^(beta b - 1); PsiBGammaL(b, gamma, L) with
        y^-b (ln y)^gamma L(ln y). Constants are set to 1. The threshold is
        raised where needed so that the shape is nonincreasing above it.

        :param psi: The generating function.
        :type psi: glstoolkit.psi.GeneratingFunction
        :return: The envelope.
        :rtype: TailEnvelope
        """
        if isinstance(psi, PsiM):
            m = psi.m
            return cls(lambda y: math.exp(-y**m), log_evaluator=lambda y: -y**m)
        if isinstance(psi, Degenerate):
            r = psi.r
            return cls(lambda y: y**-r, y_min=1., log_evaluator=lambda y: -r*math.log(y))
        if isinstance(psi, PsiBBeta):
            b, power = psi.b, psi.beta*psi.b - 1.
            def log_tail(y):
                return -b*math.log(y) + power*math.log(math.log(y))
            y_min = max(math.e, math.exp(max(power, 0.)/b))
            return cls(lambda y: math.exp(log_tail(y)), y_min=y_min, log_evaluator=log_tail)
        if isinstance(psi, PsiBGammaL):
            b, gamma, L = psi.b, psi.gamma, psi.L
            def log_tail(y):
                ly = math.log(y)
                return -b*ly + gamma*math.log(ly) + math.log(float(L(ly)))
            growth = max(gamma, 0.) + (max(L.value, 0.) if L.kind == 'log_power' else 0.)
            y_min = max(math.e, math.exp(growth/b))
            return cls(lambda y: math.exp(log_tail(y)), y_min=y_min, log_evaluator=log_tail)
        raise NoClosedFormError('no reference tail for family {!r}'.format(psi.family))


def tail_bound(psi, gls_norm, y):
    """Evaluates the tail bound exp(-v*(ln(y/||f||))) valid for y >= e ||f||.

    :param psi: The generating function.
    :type psi: glstoolkit.psi.GeneratingFunction
    :param gls_norm: The Grand Lebesgue norm ||f|| (positive).
    :type gls_norm: float
    :param y: The level.
    :type y: float
    :return: An upper bound on the tail probability at y.
    :rtype: float
    """
    gls_norm = float(gls_norm)
    if not (gls_norm > 0 and math.isfinite(gls_norm)):
        raise PreconditionError('gls_norm must be positive and finite, got {}'.format(gls_norm))
    threshold = math.e*gls_norm
    if not y >= threshold*(1. - VALIDITY_RTOL):
        raise OutOfValidityError('tail bound requires y >= e*||f|| = {:.12g}, got y={:.12g}'
                                 .format(threshold, y), threshold)
    v = v_grid_function(psi)
    return math.exp(-fenchel(v, math.log(y/gls_norm)))


def _decays_before_underflow(tail, p, scan, log_scan, floor=-700., step=1e-2):
    """Checks that t^p tail(t) decreases where ln tail(t) crosses the floor.

    An envelope that drops to 0 from well above the floor ends the integral
    and counts as decaying.
    """
    above = np.flatnonzero(log_scan > floor)
    if len(above) == 0 or above[-1] == len(scan) - 1:
        return True
    lo, hi = math.log(scan[above[-1]]), math.log(scan[above[-1] + 1])
    for _ in range(60):
        mid = 0.5*(lo + hi)
        if tail.log(math.exp(mid)) > floor:
            lo = mid
        else:
            hi = mid
    right = tail.log(math.exp(lo))
    if right > floor + 10.:
        return True
    left = tail.log(math.exp(lo - step))
    return p + (right - left)/step < -1e-6


def _log_moment(tail, p, scan, log_scan, rel_tol=1e-12, max_doublings=1100):
    """Returns ln(p * int_0^inf t^(p-1) min(1, tail(t)) dt) for one exponent.

    The integrand is divided by its maximum, located on a logarithmic scan and
    refined by golden-section search, and the upper limit is doubled until
    the last piece contributes less than rel_tol of the total.
    """
    start = tail.y_min
    head = p*math.log(start) if start > 0 else -math.inf
    with np.errstate(divide='ignore', invalid='ignore'):
        h = (p - 1.)*np.log(scan) + log_scan
    finite = np.isfinite(h)
    if not finite.any():
        return head

    # integrand in ln t is exp(h + ln t); it must decay at the far end
    if finite[-1]:
        g = h + np.log(scan)
        far = g[-len(g)//10:]
        if far[-1] >= far[0] - 1e-6*max(1., abs(far[0])):
            raise UnboundedMomentError('moment integral diverges for p={:.12g}'.format(p), p)
    elif not _decays_before_underflow(tail, p, scan, log_scan):
        raise UnboundedMomentError('moment integral diverges for p={:.12g}'.format(p), p)

    def log_integrand(t):
        log_value = tail.log(t)
        if log_value == -math.inf:
            return -math.inf
        return (p - 1.)*math.log(t) + log_value if p != 1 else log_value

    index = int(np.argmax(np.where(finite, h, -np.inf)))
    lo_s = math.log(scan[max(index - 1, 0)])
    hi_s = math.log(scan[min(index + 1, len(scan) - 1)])
    s, neg = golden_section(lambda s: -log_integrand(math.exp(s)), lo_s, hi_s)
    peak, t_peak = -neg, math.exp(s)

    def integrand(t):
        if t <= 0:
            return 0.
        value = log_integrand(t)
        if value == -math.inf:
            return 0.
        return p*math.exp(min(value - peak, 700.))

    total = 0.
    lo = start
    hi = max(2.*start, t_peak, 1.)
    for k in range(max_doublings):
        piece = quad(integrand, lo, hi, limit=200, epsabs=0., epsrel=1e-13)[0]
        total += piece
        if hi > t_peak and piece <= rel_tol*total:
            break
        if not math.isfinite(hi*2.):
            raise UnboundedMomentError('moment integral diverges for p={:.12g}'.format(p), p)
        lo, hi = hi, 2.*hi
    else:
        raise UnboundedMomentError('moment integral diverges for p={:.12g}'.format(p), p)
    if total <= 0:
        return head
    return float(np.logaddexp(head, peak + math.log(total)))


def norm_bound_from_tail(tail, psi, K=1., grid=None, n=32):
    """Certifies an upper bound on ||f||G(psi) from a tail envelope.

    The envelope is read in units of K: T_f(y) <= min(1, tail(y/K)). For each
    grid exponent the moment |f|_p^p is bounded by p int y^(p-1) T(y) dy, and
    the result is K sup_p (moment bound)^(1/p) / psi(p).

    :param tail: The envelope.
    :type tail: TailEnvelope
    :param psi: The generating function, with b = inf.
    :type psi: glstoolkit.psi.GeneratingFunction
    :param K: The scale of the envelope.
    :type K: float, optional
    :param grid: The p-grid. Defaults to n geometric nodes on [1, P_max/2], clear of
        the cap at which envelopes built from a truncated grid turn into powers.
    :type grid: numpy.ndarray, optional
    :param n: The number of nodes of the default grid.
    :type n: int, optional
    :return: The certified bound.
    :rtype: float
    """
    K = float(K)
    if not (K > 0 and math.isfinite(K)):
        raise PreconditionError('K must be positive and finite, got {}'.format(K))
    if math.isfinite(psi.b):
        raise PreconditionError('moment bounds from tails need b = inf, got b={}'.format(psi.b))
    grid = psi.grid(n=n, p_max=0.5*utils.get_pmax()) if grid is None else np.asarray(grid, dtype=float)
    if psi.upper is not None:
        grid = grid[grid <= psi.upper]
    denominators = psi.evaluate(grid)

    scan = np.geomspace(max(tail.y_min, 1e-12), 1e300, 512)
    log_scan = tail.log(scan)
    best = 0.
    for p, denominator in zip(grid, denominators):
        log_moment = _log_moment(tail, float(p), scan, log_scan)
        if log_moment == -math.inf:
            continue
        best = max(best, math.exp(log_moment/p)/denominator)
    return K*best


def orlicz_M(psi, y):
    """Evaluates the exponential Young-Orlicz function M[psi].

    M(y) = exp(v*(ln|y|)) for |y| >= e and C y^2 below, with C chosen so that M
    is continuous at |y| = e.

    :param psi: The generating function.
    :type psi: glstoolkit.psi.GeneratingFunction
    :param y: The argument.
    :type y: float
    :return: The value (inf on overflow).
    :rtype: float
    """
    y = abs(float(y))
    v = v_grid_function(psi)
    if y >= math.e:
        exponent = fenchel(v, math.log(y))
    else:
        exponent = fenchel(v, 1.)
    with np.errstate(over='ignore'):
        at_e = float(np.exp(exponent))
    if y >= math.e:
        return at_e
    return at_e/math.e**2*y**2
