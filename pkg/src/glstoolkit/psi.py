"""Generating functions of Grand Lebesgue Spaces.

A generating function is a positive continuous function on [1, b) with
infimum 1; the Grand Lebesgue norm of f is the supremum over p of
|f|_p / psi(p). The named families below cover the power family
p^(1/m), its slowly varying modification, the bounded-support families and
the degenerate function whose space is an ordinary Lebesgue space.
"""

import copy
import math
import numpy as np
from glstoolkit import utils
from glstoolkit.numerics import p_grid, EDGE
from glstoolkit.exceptions import DomainError, InvalidFunctionError, \
    IncompatibleSupportError, PreconditionError


class SlowlyVarying:
    """A slowly varying function L on [0, inf).

    Two kinds are supported: ``log_power`` with L(y) = ln^r(y + e) and
    ``constant`` with L(y) = c.
    """

    KINDS = ('log_power', 'constant')

    def __init__(self, kind, value):
        """Initializes the slowly varying function.

        :param kind: Either 'log_power' or 'constant'.
        :type kind: str
        :param value: The exponent r for 'log_power', the constant c for 'constant'.
        :type value: float
        """
        if kind not in self.KINDS:
            raise PreconditionError('slowly varying kind must be one of {}, got {!r}'.format(self.KINDS, kind))
        value = float(value)
        if not math.isfinite(value):
            raise PreconditionError('slowly varying parameter must be finite, got {}'.format(value))
        if kind == 'constant' and value <= 0:
            raise PreconditionError('constant slowly varying function needs c > 0, got {}'.format(value))
        self.kind = kind
        self.value = value


    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        if self.kind == 'constant':
            return np.full_like(y, self.value)
        return np.log(y + math.e)**self.value


    def to_descriptor(self):
        key = 'r' if self.kind == 'log_power' else 'c'
        return {'kind': self.kind, key: self.value}


    @classmethod
    def from_descriptor(cls, desc):
        """Builds the function from a JSON-style descriptor.

        :param desc: A mapping such as {"kind": "log_power", "r": 1.0}.
        :type desc: dict
        :return: The slowly varying function.
        :rtype: SlowlyVarying
        """
        if isinstance(desc, SlowlyVarying):
            return desc
        kind = desc.get('kind')
        if kind == 'log_power':
            return cls(kind, desc.get('r', 1.))
        if kind == 'constant':
            return cls(kind, desc.get('c', 1.))
        raise PreconditionError('slowly varying kind must be one of {}, got {!r}'.format(cls.KINDS, kind))


    def __repr__(self):
        return 'SlowlyVarying({!r}, {})'.format(self.kind, self.value)


class GeneratingFunction:
    """Base class for all generating functions.

    Instances are immutable once built: every transformation returns a new
    object. The value at p is ``multiplier * raw(p) / scale``, where ``raw`` is
    the family formula and ``scale`` records the divisor applied by
    normalization.
    """

    family = None

    def __init__(self, b, multiplier=1., scale=1.):
        """Initializes the generating function.

        :param b: The support bound, in (1, inf].
        :type b: float
        :param multiplier: A positive constant factor applied to the family formula.
        :type multiplier: float, optional
        :param scale: The normalization divisor.
        :type scale: float, optional
        """
        b = float(b)
        if not b > 1:
            raise PreconditionError('support bound must satisfy b > 1, got b={}'.format(b))
        multiplier = float(multiplier)
        if not (multiplier > 0 and math.isfinite(multiplier)):
            raise PreconditionError('multiplier must be positive and finite, got {}'.format(multiplier))
        self.b = b
        self.multiplier = multiplier
        self.scale = float(scale)


    def raw(self, p):
        """Evaluates the family formula without multiplier or scale.
        """
        raise NotImplementedError


    def params(self):
        """Returns the family parameters as a dictionary.
        """
        return {}


    @property
    def lower(self):
        """The smallest admissible argument.
        """
        return 1.


    @property
    def upper(self):
        """The largest admissible argument, or None when only p < b is required.
        """
        return None


    def check_domain(self, p):
        """Raises a DomainError unless every entry of p is admissible.

        :param p: The arguments.
        :type p: numpy.ndarray
        """
        bad = ~((p >= self.lower) & (p < self.b))
        if self.upper is not None:
            bad |= p > self.upper
        if np.any(bad):
            first = float(np.asarray(p)[bad].flat[0])
            if self.upper is not None:
                raise DomainError('p={:.12g} outside the tabulated range [{:.12g}, {:.12g}] (b={})'
                                  .format(first, self.lower, self.upper, self.b))
            raise DomainError('p={:.12g} outside [1, b) with b={}'.format(first, self.b))


    def evaluate(self, p):
        """Evaluates the generating function.

        :param p: The argument(s), each in [1, b).
        :type p: float or numpy.ndarray
        :return: The value(s), finite and positive.
        :rtype: float or numpy.ndarray
        """
        arr = np.asarray(p, dtype=float)
        self.check_domain(arr)
        values = self.multiplier*self.raw(arr)/self.scale
        if np.ndim(p) == 0:
            return float(values)
        return values


    def __call__(self, p):
        return self.evaluate(p)


    def v(self, p):
        """Evaluates v(p) = p ln psi(p).

        :param p: The argument(s), each in [1, b).
        :type p: float or numpy.ndarray
        :return: The value(s).
        :rtype: float or numpy.ndarray
        """
        values = np.asarray(p, dtype=float)*np.log(self.evaluate(p))
        if np.ndim(p) == 0:
            return float(values)
        return values


    def grid(self, n=None, p_max=None):
        """Returns the evaluation grid of this function.

        :param n: The number of nodes. Defaults to 512.
        :type n: int, optional
        :param p_max: The truncation cap. Defaults to utils.get_pmax().
        :type p_max: float, optional
        :return: The grid.
        :rtype: numpy.ndarray
        """
        n = utils.DEFAULT_NODES if n is None else n
        p_max = utils.get_pmax() if p_max is None else p_max
        return p_grid(self.b, n, p_max)


    def with_scale(self, scale):
        """Returns a copy with a different normalization divisor.
        """
        other = copy.copy(self)
        other.scale = float(scale)
        return other


    def normalized(self, grid=None):
        """Returns this function divided by its infimum on the grid.

        :param grid: The grid on which the infimum is taken. Defaults to self.grid().
        :type grid: numpy.ndarray, optional
        :return: The normalized function.
        :rtype: GeneratingFunction
        """
        grid = self.grid() if grid is None else grid
        values = self.evaluate(grid)
        if not np.all(np.isfinite(values)) or not np.all(values > 0):
            raise InvalidFunctionError('{} takes non-positive or non-finite values on [{:.6g}, {:.6g}]'
                                       .format(self.family, grid[0], grid[-1]))
        divisor = float(values.min())
        if divisor == 1.:
            return self
        return self.with_scale(self.scale*divisor)


    def to_descriptor(self):
        """Returns the JSON-style family descriptor.
        """
        desc = {'family': self.family}
        desc.update(self.params())
        if self.multiplier != 1.:
            desc['multiplier'] = self.multiplier
        if self.scale != 1.:
            desc['scale'] = self.scale
        return desc


    def __repr__(self):
        params = ', '.join('{}={!r}'.format(k, v) for k, v in self.params().items()
                           if not isinstance(v, list))
        return '{}({}, b={}, scale={:.12g})'.format(type(self).__name__, params, self.b, self.scale)


class PsiM(GeneratingFunction):
    """The power family psi_m(p) = p^(1/m), m > 0, with infinite support.
    """

    family = 'psi_m'

    def __init__(self, m, multiplier=1.):
        m = float(m)
        if not (m > 0 and math.isfinite(m)):
            raise PreconditionError('psi_m needs m > 0, got m={}'.format(m))
        super().__init__(np.inf, multiplier)
        self.m = m


    def raw(self, p):
        return p**(1./self.m)


    def params(self):
        return {'m': self.m}


class PsiML(GeneratingFunction):
    """The family p^(1/m) L^(-1/(m-1))(p^((m-1)^2/m)), m > 1, with infinite support.

    The bracket of the printed formula is read as closing after the argument
    of L. The constructor does not normalize; make_family does.
    """

    family = 'psi_m_l'

    def __init__(self, m, L, multiplier=1.):
        m = float(m)
        if not (m > 1 and math.isfinite(m)):
            raise PreconditionError('psi_m_l needs m > 1, got m={}'.format(m))
        super().__init__(np.inf, multiplier)
        self.m = m
        self.L = SlowlyVarying.from_descriptor(L)


    def raw(self, p):
        m = self.m
        return p**(1./m)*self.L(p**((m - 1.)**2/m))**(-1./(m - 1.))


    def params(self):
        return {'m': self.m, 'L': self.L.to_descriptor()}


class PsiBGammaL(GeneratingFunction):
    """The bounded-support family (b-p)^(-(gamma+1)/b) L^(1/b)(1/(b-p)), gamma > -1.

    The leading constant is fixed by normalization (infimum 1).
    """

    family = 'psi_b_gamma_l'

    def __init__(self, b, gamma, L, multiplier=1.):
        gamma = float(gamma)
        if not (gamma > -1 and math.isfinite(gamma)):
            raise PreconditionError('psi_b_gamma_l needs gamma > -1, got gamma={}'.format(gamma))
        b = float(b)
        if not (b > 1 and math.isfinite(b)):
            raise PreconditionError('psi_b_gamma_l needs a finite b > 1, got b={}'.format(b))
        super().__init__(b, multiplier)
        self.gamma = gamma
        self.L = SlowlyVarying.from_descriptor(L)


    def raw(self, p):
        b = self.b
        gap = b - p
        return gap**(-(self.gamma + 1.)/b)*self.L(1./gap)**(1./b)


    def params(self):
        return {'b': self.b, 'gamma': self.gamma, 'L': self.L.to_descriptor()}


class Degenerate(GeneratingFunction):
    """The degenerate function equal to 1 on [1, r); its space is L_r.
    """

    family = 'degenerate'

    def __init__(self, r, multiplier=1.):
        r = float(r)
        if not (r > 1 and math.isfinite(r)):
            raise PreconditionError('degenerate needs a finite r > 1, got r={}'.format(r))
        super().__init__(r, multiplier)
        self.r = r


    def raw(self, p):
        return np.ones_like(p)


    def params(self):
        return {'r': self.r}


class PsiBBeta(GeneratingFunction):
    """psi[b,beta](p) = ((b-p)/(b-1))^(-beta) on [1, b), beta > 0.
    """

    family = 'psi_b_beta'

    def __init__(self, b, beta, multiplier=1.):
        beta = float(beta)
        if not (beta > 0 and math.isfinite(beta)):
            raise PreconditionError('psi_b_beta needs beta > 0, got beta={}'.format(beta))
        b = float(b)
        if not (b > 1 and math.isfinite(b)):
            raise PreconditionError('psi_b_beta needs a finite b > 1, got b={}'.format(b))
        super().__init__(b, multiplier)
        self.beta = beta


    def raw(self, p):
        return ((self.b - p)/(self.b - 1.))**(-self.beta)


    def params(self):
        return {'b': self.b, 'beta': self.beta}


class Tabulated(GeneratingFunction):
    """A generating function given by values on a grid, interpolated linearly.

    Evaluation outside the grid is refused rather than extrapolated.
    """

    family = 'tabulated'

    def __init__(self, grid, values, b=np.inf, multiplier=1.):
        grid = np.array(grid, dtype=float)
        values = np.array(values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or len(grid) == 0:
            raise PreconditionError('tabulated grid and values must be nonempty 1-d arrays of equal length')
        if np.any(np.diff(grid) <= 0):
            raise PreconditionError('tabulated grid must be strictly increasing')
        if grid[0] < 1:
            raise PreconditionError('tabulated grid must start at p >= 1, got {}'.format(grid[0]))
        if not np.all(np.isfinite(values)) or not np.all(values > 0):
            raise InvalidFunctionError('tabulated values must be positive and finite')
        super().__init__(b, multiplier)
        if grid[-1] >= self.b:
            raise PreconditionError('tabulated grid must lie below b={}, last node {}'.format(self.b, grid[-1]))
        grid.flags.writeable = False
        values.flags.writeable = False
        self.nodes = grid
        self.values = values


    @property
    def lower(self):
        return float(self.nodes[0])


    @property
    def upper(self):
        return float(self.nodes[-1])


    def raw(self, p):
        return np.interp(p, self.nodes, self.values)


    def grid(self, n=None, p_max=None):
        return self.nodes.copy()


    def params(self):
        desc = {'grid': self.nodes.tolist(), 'values': self.values.tolist()}
        if math.isfinite(self.b):
            desc['b'] = self.b
        return desc


class Zeta(GeneratingFunction):
    """The enlarged function p^delta psi(p) of the unequal-power case.
    """

    family = 'zeta'

    def __init__(self, base, delta, multiplier=1.):
        delta = float(delta)
        if not (delta >= 0 and math.isfinite(delta)):
            raise PreconditionError('zeta needs delta >= 0, got delta={}'.format(delta))
        super().__init__(base.b, multiplier)
        self.base = base
        self.delta = delta


    @property
    def lower(self):
        return self.base.lower


    @property
    def upper(self):
        return self.base.upper


    def raw(self, p):
        return p**self.delta*self.base.evaluate(p)


    def grid(self, n=None, p_max=None):
        return self.base.grid(n, p_max)


    def params(self):
        return {'base': self.base.to_descriptor(), 'delta': self.delta}


FAMILIES = {
    'psi_m': lambda d: PsiM(d['m']),
    'psi_m_l': lambda d: PsiML(d['m'], d.get('L', {'kind': 'log_power', 'r': 1.})).normalized(),
    'psi_b_gamma_l': lambda d: PsiBGammaL(d['b'], d['gamma'],
                                          d.get('L', {'kind': 'log_power', 'r': 1.})).normalized(),
    'degenerate': lambda d: Degenerate(d['r']),
    'psi_b_beta': lambda d: PsiBBeta(d['b'], d['beta']),
    'tabulated': lambda d: Tabulated(d['grid'], d['values'], d.get('b', np.inf)),
    'zeta': lambda d: Zeta(make_family(d['base']), d['delta']).normalized(),
}


def _as_float(value):
    try:
        return float(value)
    except (TypeError, ValueError):
        return math.nan


def make_family(spec):
    """Builds a generating function from a family descriptor.

    :param spec: A mapping such as {"family": "psi_m", "m": 2.0}; an optional
        "multiplier" scales the family formula. GeneratingFunction instances
        are returned unchanged.
    :type spec: dict
    :return: The generating function.
    :rtype: GeneratingFunction
    """
    if isinstance(spec, GeneratingFunction):
        return spec
    if not isinstance(spec, dict):
        raise PreconditionError('a family descriptor must be a mapping, got {}'.format(type(spec).__name__))
    family = spec.get('family')
    if not isinstance(family, str) or family not in FAMILIES:
        raise PreconditionError('unknown family {!r}; expected one of {}'.format(family, sorted(FAMILIES)))
    try:
        psi = FAMILIES[family](spec)
    except KeyError as e:
        raise PreconditionError('family {!r} is missing parameter {}'.format(family, e))
    except PreconditionError:
        raise
    except (TypeError, ValueError) as e:
        raise PreconditionError('malformed parameters for family {!r}: {}'.format(family, e))
    multiplier = spec.get('multiplier')
    if multiplier is not None:
        psi = copy.copy(psi)
        psi.multiplier = _as_float(multiplier)
        if not (psi.multiplier > 0 and math.isfinite(psi.multiplier)):
            raise PreconditionError('multiplier must be positive and finite, got {}'.format(multiplier))
    scale = spec.get('scale')
    if scale is not None:
        scale = _as_float(scale)
        if not (scale > 0 and math.isfinite(scale)):
            raise PreconditionError('scale must be positive and finite, got {}'.format(scale))
        psi = psi.with_scale(scale)
    return psi


def evaluate(psi, p):
    """Evaluates psi at p in [1, b).
    """
    return psi.evaluate(p)


def v_function(psi, p):
    """Evaluates v(p) = p ln psi(p).
    """
    return psi.v(p)


def normalize(psi):
    """Divides psi by its infimum on the shared grid, recording the divisor in ``scale``.
    """
    return psi.normalized()


def same_support(b1, b2):
    """Checks whether two support bounds coincide.
    """
    if math.isinf(b1) or math.isinf(b2):
        return b1 == b2
    return math.isclose(b1, b2, rel_tol=1e-12)


def dominates(psi, nu, tolerance=1e-2, n=None):
    """Checks psi << nu, i.e. psi(p)/nu(p) -> 0 at the right end of the support.

    This is a numerical proxy for the limit: the ratio is sampled on a grid
    approaching b (or the cap 1e12 when b is infinite, or the last node of a
    tabulated function), and the answer is True when the ratio is
    nonincreasing over the last quarter of the grid and below the tolerance
    at the final node.

    :param psi: The function expected to be smaller.
    :type psi: GeneratingFunction
    :param nu: The function expected to be larger.
    :type nu: GeneratingFunction
    :param tolerance: The threshold for the final ratio.
    :type tolerance: float, optional
    :param n: The number of grid nodes. Defaults to 512.
    :type n: int, optional
    :return: Whether psi << nu.
    :rtype: bool
    """
    if not same_support(psi.b, nu.b):
        raise IncompatibleSupportError('support bounds differ: b={} and b={}'.format(psi.b, nu.b))
    n = utils.DEFAULT_NODES if n is None else n
    lower = max(psi.lower, nu.lower)
    uppers = [f.upper for f in (psi, nu) if f.upper is not None]
    if uppers:
        grid = np.geomspace(lower, min(uppers), n)
    elif math.isinf(psi.b):
        grid = np.geomspace(lower, utils.DOMINATION_PMAX, n)
    else:
        b = psi.b
        grid = b - (b - lower)*np.geomspace(1., EDGE, n)
        grid[0] = lower
    ratio = psi.evaluate(grid)/nu.evaluate(grid)
    tail = ratio[3*n//4:]
    decreasing = bool(np.all(np.diff(tail) <= 1e-12*tail[:-1]))
    return decreasing and bool(ratio[-1] < tolerance)
