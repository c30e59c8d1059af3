"""Operator constants and norm propagation for operators of type (lambda, nu).

An operator Q is of type (lambda, nu) with constant Z when
|Q f|_p <= Z p^lambda (p-1)^-nu |f|_p on (1, b). The constant
K_lambda[psi, b] = inf_q q^lambda psi(q) / (q-1)^lambda then bounds Q on the
Grand Lebesgue space of psi.
"""

import json
import math
from dataclasses import dataclass, field
import numpy as np
from glstoolkit import utils
from glstoolkit.numerics import open_grid, minimize_on_grid
from glstoolkit.psi import PsiM, Degenerate, PsiBBeta, Zeta, make_family, same_support
from glstoolkit.conjugate import TailEnvelope
from glstoolkit.exceptions import PreconditionError, DomainError, IncompatibleSupportError, \
    NoClosedFormError, NoFiniteValueError


class OperatorTypeSpec:
    """The type (lambda, nu), constant Z and support bound b of an operator.
    """

    def __init__(self, lam, nu, Z=1., b=np.inf):
        """Initializes the operator type.

        :param lam: The power lambda of p.
        :type lam: float
        :param nu: The power nu of 1/(p-1); 0 <= nu <= lambda.
        :type nu: float
        :param Z: The operator constant.
        :type Z: float, optional
        :param b: The support bound.
        :type b: float, optional
        """
        self.lam = float(lam)
        self.nu = float(nu)
        self.Z = float(Z)
        self.b = float(b)
        if not (self.lam >= self.nu >= 0) or math.isinf(self.lam):
            raise PreconditionError('operator type needs lambda >= nu >= 0, got lambda={}, nu={}'
                                    .format(self.lam, self.nu))
        if not (self.Z > 0 and math.isfinite(self.Z)):
            raise PreconditionError('operator constant needs Z > 0, got Z={}'.format(self.Z))
        if not self.b > 1:
            raise PreconditionError('support bound must satisfy b > 1, got b={}'.format(self.b))


    @property
    def delta(self):
        return self.lam - self.nu


    def factor(self, p):
        """Evaluates Z p^lambda / (p-1)^nu.
        """
        p = np.asarray(p, dtype=float)
        return self.Z*p**self.lam/(p - 1.)**self.nu


    def to_dict(self):
        """Returns the type as a mapping; an unbounded support is written as b=None.
        """
        return {'lambda': self.lam, 'nu': self.nu, 'Z': self.Z, 'b': self.b if math.isfinite(self.b) else None}


    @classmethod
    def from_dict(cls, d):
        b = d.get('b')
        return cls(d['lambda'], d['nu'], d.get('Z', 1.), np.inf if b is None else b)


    def __eq__(self, other):
        return isinstance(other, OperatorTypeSpec) and self.to_dict() == other.to_dict()


@dataclass
class BoundReport:
    """A constant or norm bound, where it is attained and the space it refers to.
    """

    value: float
    argmin_q: float
    method: str
    target_space: dict
    flags: list = field(default_factory=list)
    alternatives: list = field(default_factory=list)


    def to_dict(self):
        return {'value': self.value,
                'argmin_q': self.argmin_q,
                'method': self.method,
                'target_space': self.target_space,
                'flags': list(self.flags),
                'alternatives': [a.to_dict() for a in self.alternatives]}


    @classmethod
    def from_dict(cls, d):
        return cls(d['value'], d['argmin_q'], d['method'], d['target_space'], list(d.get('flags', [])),
                   [cls.from_dict(a) for a in d.get('alternatives', [])])


    def to_json(self):
        return utils.to_json(self.to_dict())


    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def target_function(report):
    """Rebuilds the generating function of the space a report refers to.
    """
    return make_family(report.target_space)


def _check_lambda(lam):
    lam = float(lam)
    if not (lam >= 0 and math.isfinite(lam)):
        raise PreconditionError('lambda must be finite and >= 0, got {}'.format(lam))
    return lam


def _q_grid(psi, n=None):
    """Returns the open q-grid on (1, b), restricted to where psi is defined.
    """
    n = utils.DEFAULT_NODES if n is None else n
    grid = open_grid(psi.b, n, utils.get_pmax())
    grid = grid[grid >= psi.lower]
    if psi.upper is not None:
        grid = grid[grid <= psi.upper]
    if len(grid) == 0:
        raise NoFiniteValueError('no q-grid node lies where {} is defined'.format(psi.family))
    return grid


def tilde_psi(psi, q, lam, p):
    """Evaluates the two-branch function psi~_(q, lambda)(p).

    It equals (q/(q-1))^lambda psi(q) for p <= q and (p/(p-1))^lambda psi(p)
    beyond, removing the singularity of (p/(p-1))^lambda at p = 1.

    :param psi: The generating function.
    :type psi: glstoolkit.psi.GeneratingFunction
    :param q: The switch point, in (1, b).
    :type q: float
    :param lam: The power lambda >= 0.
    :type lam: float
    :param p: The argument(s), in [1, b).
    :type p: float or numpy.ndarray
    :return: The value(s).
    :rtype: float or numpy.ndarray
    """
    lam = _check_lambda(lam)
    q = float(q)
    if not (1 < q < psi.b):
        raise DomainError('switch point must satisfy 1 < q < b={}, got q={}'.format(psi.b, q))
    arr = np.asarray(p, dtype=float)
    psi.check_domain(arr)
    values = np.full(arr.shape, (q/(q - 1.))**lam*psi.evaluate(q))
    right = arr > q
    if np.any(right):
        values[right] = (arr[right]/(arr[right] - 1.))**lam*psi.evaluate(arr[right])
    if np.ndim(p) == 0:
        return float(values)
    return values


def k_constant(psi, lam, b=None, n=None):
    """Computes K_lambda[psi, b] = inf over q in (1, b) of q^lambda psi(q) / (q-1)^lambda.

    The objective is scanned in log form on a grid accumulating at both ends of
    (1, b) and refined by golden-section search. An infimum attained at the
    first or last node is flagged ``boundary_attained``.

    :param psi: The normalized generating function.
    :type psi: glstoolkit.psi.GeneratingFunction
    :param lam: The power lambda >= 0.
    :type lam: float
    :param b: The support bound; must agree with psi.b when given.
    :type b: float, optional
    :param n: The number of grid nodes.
    :type n: int, optional
    :return: The constant and its argmin.
    :rtype: BoundReport
    """
    lam = _check_lambda(lam)
    if b is not None and not same_support(float(b), psi.b):
        raise IncompatibleSupportError('support bound b={} differs from that of psi (b={})'.format(b, psi.b))
    grid = _q_grid(psi, n)

    def objective(q):
        q = np.asarray(q, dtype=float)
        with np.errstate(divide='ignore', invalid='ignore'):
            return lam*(np.log(q) - np.log(q - 1.)) + np.log(psi.evaluate(q)) if lam > 0 \
                else np.log(psi.evaluate(q))

    q, log_value, index = minimize_on_grid(objective, grid, tol=utils.REFINEMENT_TOL)
    flags = ['boundary_attained'] if index in (0, len(grid) - 1) else []
    return BoundReport(math.exp(log_value), q, 'grid+golden', psi.to_descriptor(), flags)


def k_reference(psi, lam):
    """Evaluates the closed-form reference for K_lambda.

    PsiM(m) gives m^(1/m) (lambda+1/m)^(lambda+1/m) lambda^-lambda, attained at
    q = lambda m + 1. Degenerate(r) gives (r/(r-1))^lambda, approached as
    q -> r. For PsiBBeta(b, beta) the objective is evaluated at its stationary
    point (lambda b + beta)/(lambda + beta), an upper bound for the infimum
    reported with the ``upper_bound`` flag.

    :param psi: The generating function or its descriptor.
    :type psi: glstoolkit.psi.GeneratingFunction or dict
    :param lam: The power lambda >= 0.
    :type lam: float
    :return: The closed-form value.
    :rtype: BoundReport
    """
    psi = make_family(psi)
    lam = _check_lambda(lam)
    factor = psi.multiplier/psi.scale
    if isinstance(psi, PsiM):
        m = psi.m
        if lam == 0:
            return BoundReport(factor, 1., 'closed-form', psi.to_descriptor())
        value = m**(1./m)*(lam + 1./m)**(lam + 1./m)*lam**-lam
        return BoundReport(factor*value, lam*m + 1., 'closed-form', psi.to_descriptor())
    if isinstance(psi, Degenerate):
        r = psi.r
        return BoundReport(factor*(r/(r - 1.))**lam, r, 'closed-form', psi.to_descriptor(), ['boundary_attained'])
    if isinstance(psi, PsiBBeta):
        b, beta = psi.b, psi.beta
        q = (lam*b + beta)/(lam + beta)
        value = (lam*b + beta)**lam*(lam + beta)**beta/(lam**lam*beta**beta*(b - 1.)**lam)
        return BoundReport(factor*value, q, 'closed-form', psi.to_descriptor(), ['upper_bound'])
    raise NoClosedFormError('no closed form for family {!r}; use k_constant'.format(psi.family))


def k_simple_upper(psi, lam):
    """Evaluates the simple upper estimate of K_lambda: the objective at q = 2,
    or at q = (b+1)/2 when b <= 2.
    """
    lam = _check_lambda(lam)
    q = 2. if psi.b > 2 else 0.5*(psi.b + 1.)
    return (q/(q - 1.))**lam*psi.evaluate(q)


def propagate(spec, psi, input_norm):
    """Bounds the Grand Lebesgue norm of Q[f] from that of f.

    For lambda = nu the bound Z K_lambda[psi] ||f|| holds in the space of psi.
    For lambda > nu it holds in the space of zeta = p^(lambda-nu) psi(p),
    normalized, with the normalization divisor folded into the value. When b
    is finite, the same-space bound Z b^(lambda-nu) K_nu[psi] ||f|| in the space
    of psi is attached as an alternative.

    :param spec: The operator type.
    :type spec: OperatorTypeSpec
    :param psi: The normalized generating function of the input space.
    :type psi: glstoolkit.psi.GeneratingFunction
    :param input_norm: The norm of f, nonnegative.
    :type input_norm: float
    :return: The bound on the norm of Q[f].
    :rtype: BoundReport
    """
    if not same_support(spec.b, psi.b):
        raise IncompatibleSupportError('operator support b={} differs from that of psi (b={})'
                                       .format(spec.b, psi.b))
    input_norm = float(input_norm)
    if not (input_norm >= 0 and math.isfinite(input_norm)):
        raise PreconditionError('input norm must be finite and >= 0, got {}'.format(input_norm))

    if spec.delta == 0:
        k = k_constant(psi, spec.lam)
        return BoundReport(spec.Z*k.value*input_norm, k.argmin_q, k.method, k.target_space, k.flags)

    zeta = Zeta(psi, spec.delta).normalized()
    k = k_constant(zeta, spec.nu)
    report = BoundReport(spec.Z*zeta.scale*k.value*input_norm, k.argmin_q, k.method,
                         zeta.to_descriptor(), k.flags)
    if math.isfinite(psi.b):
        same = k_constant(psi, spec.nu)
        report.alternatives.append(BoundReport(spec.Z*psi.b**spec.delta*same.value*input_norm, same.argmin_q,
                                               same.method, psi.to_descriptor(), same.flags + ['same_space']))
    return report


def propagate_tail(spec, psi, input_norm):
    """Returns the tail envelope of Q[f] implied by the propagated norm bound.

    :param spec: The operator type.
    :type spec: OperatorTypeSpec
    :param psi: The generating function of the input space.
    :type psi: glstoolkit.psi.GeneratingFunction
    :param input_norm: The norm of f, positive.
    :type input_norm: float
    :return: The envelope, valid above e times the bound.
    :rtype: glstoolkit.conjugate.TailEnvelope
    """
    report = propagate(spec, psi, input_norm)
    return TailEnvelope.from_generating_function(target_function(report), norm=report.value)


class TabulatedWeight:
    """A weight W given at nodes and held constant to the right of each node.
    """

    def __init__(self, grid, values):
        grid = np.array(grid, dtype=float)
        values = np.array(values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or len(grid) == 0:
            raise PreconditionError('weight grid and values must be nonempty 1-d arrays of equal length')
        if np.any(np.diff(grid) <= 0):
            raise PreconditionError('weight grid must be strictly increasing')
        if np.any(values < 0) or np.any(np.isnan(values)):
            raise PreconditionError('weight values must be nonnegative')
        self.nodes = grid
        self.values = values


    def __call__(self, q):
        q = np.asarray(q, dtype=float)
        index = np.searchsorted(self.nodes, q, side='right') - 1
        values = np.where(index >= 0, self.values[np.clip(index, 0, None)], np.inf)
        return float(values) if values.ndim == 0 else values


def upsilon_table(W, psi, grid, n=None):
    """Evaluates upsilon(p) = min(inf over q >= p of W(q) psi(q), W(p) psi(p)) on a grid.

    The first branch uses |g|_p <= |g|_q for q >= p and is labelled
    'lyapunov'; the second is labelled 'direct'. A tabulated weight is read at
    its own nodes; a callable weight on the open q-grid of psi.

    :param W: The weight, a callable accepting arrays or a TabulatedWeight.
    :type W: callable
    :param psi: The generating function.
    :type psi: glstoolkit.psi.GeneratingFunction
    :param grid: The exponents p, each in [1, b).
    :type grid: array_like
    :param n: The number of q-grid nodes for a callable weight.
    :type n: int, optional
    :return: The columns p, value, branch and argmin_q.
    :rtype: dict
    """
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    psi.check_domain(grid)
    if isinstance(W, TabulatedWeight):
        q_grid = W.nodes[(W.nodes > 1) & (W.nodes < psi.b)]
    else:
        q_grid = _q_grid(psi, n)
    with np.errstate(divide='ignore', invalid='ignore'):
        products = np.asarray(W(q_grid), dtype=float)*psi.evaluate(q_grid)
        direct = np.asarray(W(grid), dtype=float)*psi.evaluate(grid)
    products = np.where(np.isfinite(products), products, np.inf)
    direct = np.where(np.isfinite(direct) & (grid > 1), direct, np.inf)
    if np.all(np.isinf(products)) and np.all(np.isinf(direct)):
        raise NoFiniteValueError('the weight is not finite anywhere on the q-grid')

    # suffix minima: best[k] = min over j >= k of products[j]
    best = np.minimum.accumulate(products[::-1])[::-1]
    best_index = np.empty(len(products), dtype=int)
    current = len(products) - 1
    for k in range(len(products) - 1, -1, -1):
        if products[k] <= products[current]:
            current = k
        best_index[k] = current

    table = {'p': [], 'value': [], 'branch': [], 'argmin_q': []}
    for p, d in zip(grid, direct):
        start = int(np.searchsorted(q_grid, p, side='left'))
        left = best[start] if start < len(best) else np.inf
        if left <= d:
            if math.isinf(left):
                raise NoFiniteValueError('upsilon is not finite at p={:.12g}'.format(p))
            value, branch, q = left, 'lyapunov', q_grid[best_index[start]]
        else:
            value, branch, q = d, 'direct', p
        table['p'].append(float(p))
        table['value'].append(float(value))
        table['branch'].append(branch)
        table['argmin_q'].append(float(q))
    return table


def upsilon(W, psi, p, n=None):
    """Evaluates the generating function upsilon of the target space at one exponent.

    :param W: The weight, a callable accepting arrays or a TabulatedWeight.
    :type W: callable
    :param psi: The generating function.
    :type psi: glstoolkit.psi.GeneratingFunction
    :param p: The exponent, in [1, b).
    :type p: float
    :return: The value.
    :rtype: float
    """
    return upsilon_table(W, psi, [p], n)['value'][0]
