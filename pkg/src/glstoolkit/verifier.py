"""Seeded simulations of maximal operators and checks of their norm inequalities.

Every random quantity is drawn from per-block substreams of one seed, so a
report is reproducible from its own config echo.
"""

import json
import math
from dataclasses import dataclass, field, fields, asdict
import numpy as np
from glstoolkit import utils
from glstoolkit.empirics import EmpiricalSample, lp_norm, moment_profile, gls_norm
from glstoolkit.bounds import OperatorTypeSpec, propagate, target_function
from glstoolkit.psi import make_family, dominates
from glstoolkit.exceptions import PreconditionError, DomainError, IndeterminateRatioError, \
    IncompatibleGridError

# paths per random substream
BLOCK_PATHS = 256
# rotation number of the ergodic scenario
GOLDEN_ROTATION = (math.sqrt(5.) - 1.)/2.
KINDS = ('doob', 'dunford-schwartz', 'fourier')
COLUMNS = ('p', 'input_norm', 'output_norm', 'bound', 'ratio')


def generate_seed():
    """Draws a fresh 64-bit seed from system entropy.
    """
    return int(np.random.SeedSequence().generate_state(1, np.uint64)[0])


def substreams(seed, count):
    """Returns independent Philox generators spawned from one seed.
    """
    return [np.random.Generator(np.random.Philox(child)) for child in np.random.SeedSequence(seed).spawn(count)]


@dataclass
class ScenarioConfig:
    """The parameters of one simulated scenario.

    ``steps`` is the number of martingale steps for 'doob' and the truncation
    level N of the ergodic averages for 'dunford-schwartz'. ``signal`` selects
    the input function of the grid scenarios and ``generator`` the increments
    of the martingale. With ``check='gls'`` the scenario is verified at the
    level of Grand Lebesgue norms for ``psi``. ``slack`` defaults to
    utils.MONTE_CARLO_SLACK for that check and to utils.GRID_SLACK otherwise.
    """

    kind: str
    paths: int = 10**4
    steps: int = 2**10
    grid: int = 2**12
    degree: int = 32
    seed: int = None
    p_grid: list = field(default_factory=lambda: [1.5, 2., 3., 4.])
    lam: float = 1.
    nu: float = 1.
    Z: float = 1.
    slack: float = None
    generator: str = 'pm1'
    scaled: bool = False
    signal: str = None
    check: str = 'type'
    psi: dict = None


    def __post_init__(self):
        if self.kind not in KINDS:
            raise PreconditionError('scenario kind must be one of {}, got {!r}'.format(KINDS, self.kind))
        for name in ('paths', 'steps', 'grid', 'degree'):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise PreconditionError('{} must be an integer >= 1, got {}'.format(name, value))
            setattr(self, name, int(value))
        self.p_grid = [float(p) for p in self.p_grid]
        if any(not p > 1 for p in self.p_grid):
            raise DomainError('scenario p-grid nodes must be > 1, got {}'.format(self.p_grid))
        if self.generator not in ('pm1', 'zero'):
            raise PreconditionError("generator must be 'pm1' or 'zero', got {!r}".format(self.generator))
        if self.check not in ('type', 'gls'):
            raise PreconditionError("check must be 'type' or 'gls', got {!r}".format(self.check))
        if self.check == 'gls' and self.psi is None:
            raise PreconditionError("check='gls' needs a generating function descriptor in psi")
        if self.slack is None:
            self.slack = utils.MONTE_CARLO_SLACK if self.check == 'gls' else utils.GRID_SLACK
        self.slack = float(self.slack)
        if not (self.slack >= 0 and math.isfinite(self.slack)):
            raise PreconditionError('slack must be finite and >= 0, got {}'.format(self.slack))
        if self.seed is not None:
            self.seed = int(self.seed)


    def to_dict(self):
        return asdict(self)


    @classmethod
    def from_dict(cls, d):
        """Builds a scenario from a mapping, naming any unknown or malformed entry.
        """
        if not isinstance(d, dict):
            raise PreconditionError('a scenario must be a JSON object, got {}'.format(type(d).__name__))
        unknown = sorted(set(d) - {f.name for f in fields(cls)})
        if unknown:
            raise PreconditionError('unknown scenario keys {}'.format(unknown))
        try:
            return cls(**d)
        except PreconditionError:
            raise
        except (TypeError, ValueError) as e:
            raise PreconditionError('malformed scenario: {}'.format(e))


    @classmethod
    def from_json(cls, path):
        """Loads a scenario from a JSON file.
        """
        return cls.from_dict(read_scenario(path))


def read_scenario(path):
    """Reads the raw scenario mapping of a JSON file, before defaults are filled in.
    """
    try:
        with open(path, 'r') as f:
            return json.load(f)
    except (OSError, ValueError) as e:
        raise PreconditionError('could not read scenario file {}: {}'.format(path, e))


@dataclass
class VerificationReport:
    """Per-p statistics of a check and its verdict.
    """

    kind: str
    passed: bool
    slack: float
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    config: dict = None


    def to_dict(self):
        return asdict(self)


    @classmethod
    def from_dict(cls, d):
        return cls(**d)


    def to_json(self):
        return utils.to_json(self.to_dict())


    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def simulate_doob(config, progress_obj=None):
    """Simulates random walks and their running maxima.

    Each path is a sum of symmetric +-1 increments (or zeros with
    ``generator='zero'``), optionally divided by sqrt(steps).

    :param config: The scenario.
    :type config: ScenarioConfig
    :param progress_obj: The progress bar.
    :type progress_obj: ProgressBar, optional
    :return: The terminal values f_N and the maxima max_n |f_n|.
    :rtype: tuple
    """
    n_blocks = -(-config.paths//BLOCK_PATHS)
    if progress_obj:
        progress_obj.reset_progress()
        progress_obj.set_maximum_value(n_blocks)
        progress_obj.sync_status(update='Simulating {} paths of {} steps...'.format(config.paths, config.steps))
    terminal = np.empty(config.paths)
    maxima = np.empty(config.paths)
    for k, rng in enumerate(substreams(config.seed, n_blocks)):
        start = k*BLOCK_PATHS
        size = min(BLOCK_PATHS, config.paths - start)
        if config.generator == 'zero':
            increments = np.zeros((size, config.steps))
        else:
            increments = 2.*rng.integers(0, 2, size=(size, config.steps)) - 1.
        walks = np.cumsum(increments, axis=1)
        terminal[start:start + size] = walks[:, -1]
        maxima[start:start + size] = np.abs(walks).max(axis=1)
        if progress_obj:
            progress_obj.sync_status(increment=True)
    if config.scaled:
        terminal /= math.sqrt(config.steps)
        maxima /= math.sqrt(config.steps)
    if progress_obj:
        progress_obj.signal_finished()
    return EmpiricalSample(terminal), EmpiricalSample(maxima)


def simulate_dunford_schwartz(config, progress_obj=None):
    """Evaluates the truncated maximal ergodic average of a golden rotation.

    On the grid t_j = j/G the average (1/n) sum_(k<n) f(t_j + k alpha mod 1) is
    maximized over 2 <= n <= N with N = config.steps. The truncation is
    pointwise below the full maximal operator.

    :param config: The scenario; ``signal`` is 'indicator' (of [0, 1/2)),
        'constant' or 'random'.
    :type config: ScenarioConfig
    :param progress_obj: The progress bar.
    :type progress_obj: ProgressBar, optional
    :return: The grid samples of f and of the maximal average.
    :rtype: tuple
    """
    if config.steps < 2:
        raise PreconditionError('the ergodic averages need N >= 2, got N={}'.format(config.steps))
    size = config.grid
    t = np.arange(size)/size
    signal = config.signal or 'indicator'
    if signal == 'indicator':
        f = (t < 0.5).astype(float)
    elif signal == 'constant':
        f = np.ones(size)
    elif signal == 'random':
        f = substreams(config.seed, 1)[0].uniform(-1., 1., size)
    else:
        raise PreconditionError("signal must be 'indicator', 'constant' or 'random', got {!r}".format(signal))

    if progress_obj:
        progress_obj.reset_progress()
        progress_obj.set_maximum_value(config.steps)
        progress_obj.sync_status(update='Averaging {} iterates on {} points...'.format(config.steps, size))
    running = np.zeros(size)
    best = np.full(size, -np.inf)
    for k in range(config.steps):
        index = np.floor(np.mod(t + k*GOLDEN_ROTATION, 1.)*size).astype(int) % size
        running += f[index]
        if k >= 1:
            best = np.maximum(best, running/(k + 1))
        if progress_obj:
            progress_obj.sync_status(increment=True)
    if progress_obj:
        progress_obj.signal_finished()
    return EmpiricalSample(f), EmpiricalSample(best)


def simulate_fourier_maximal(config, progress_obj=None):
    """Evaluates the maximal partial Fourier sum of a trigonometric polynomial.

    The system 1, sqrt(2) cos kx, sqrt(2) sin kx is orthonormal for the
    normalized measure on [-pi, pi). The partial sums s_M for 0 <= M <= D are
    accumulated harmonic by harmonic and g = max_M |s_M|.

    :param config: The scenario; ``signal`` is 'random' (uniform coefficients
        in [-1, 1]), 'cosine' (f = cos x) or 'constant' (f = 1).
    :type config: ScenarioConfig
    :param progress_obj: The progress bar.
    :type progress_obj: ProgressBar, optional
    :return: The grid samples of f and g.
    :rtype: tuple
    """
    degree = config.degree
    x = -math.pi + 2.*math.pi*np.arange(config.grid)/config.grid
    signal = config.signal or 'random'
    a = np.zeros(degree + 1)
    b = np.zeros(degree + 1)
    if signal == 'random':
        rng = substreams(config.seed, 1)[0]
        a = rng.uniform(-1., 1., degree + 1)
        b[1:] = rng.uniform(-1., 1., degree)
    elif signal == 'cosine':
        a[1] = 1./math.sqrt(2.)
    elif signal == 'constant':
        a[0] = 1.
    else:
        raise PreconditionError("signal must be 'random', 'cosine' or 'constant', got {!r}".format(signal))

    if progress_obj:
        progress_obj.sync_status(update='Summing {} harmonics on {} points...'.format(degree, config.grid))
    k = np.arange(1, degree + 1)[:, None]
    harmonics = math.sqrt(2.)*(a[1:, None]*np.cos(k*x) + b[1:, None]*np.sin(k*x))
    partial = a[0] + np.vstack([np.zeros((1, len(x))), np.cumsum(harmonics, axis=0)])
    return EmpiricalSample(partial[-1]), EmpiricalSample(np.abs(partial).max(axis=0))


def _ratio(numerator, denominator, p):
    if denominator > 0:
        return numerator/denominator
    if numerator > 0:
        raise IndeterminateRatioError('|f|_p = 0 but |g|_p = {:.12g} at p={:.12g}'.format(numerator, p))
    return 0.


def fit_type_constant(f, g, lam, nu, grid):
    """Computes the smallest Z with |g|_p <= Z p^lambda (p-1)^-nu |f|_p on the grid.

    :param f: The input sample.
    :type f: glstoolkit.empirics.EmpiricalSample
    :param g: The output sample.
    :type g: glstoolkit.empirics.EmpiricalSample
    :param lam: The power lambda.
    :type lam: float
    :param nu: The power nu.
    :type nu: float
    :param grid: The exponents, each > 1.
    :type grid: array_like
    :return: The fitted constant (0 when every ratio is vacuous).
    :rtype: float
    """
    unit = OperatorTypeSpec(lam, nu)
    best = 0.
    for p in grid:
        if not p > 1:
            raise DomainError('type checks need p > 1, got p={}'.format(p))
        best = max(best, _ratio(lp_norm(g, p), float(unit.factor(p))*lp_norm(f, p), p))
    return best


def verify_type(f, g, spec, p_grid, slack=utils.GRID_SLACK, config=None):
    """Checks |g|_p <= Z p^lambda (p-1)^-nu |f|_p on a grid of exponents.

    The check passes when every ratio r(p) = |g|_p / (Z p^lambda (p-1)^-nu |f|_p)
    is at most 1 + slack. The report also carries min_p |g|_p / |f|_p; when it
    is at least 1 the fitted operator norm is bounded below by 1, which is
    flagged ``norm_at_least_one``.

    :param f: The input sample.
    :type f: glstoolkit.empirics.EmpiricalSample
    :param g: The output sample.
    :type g: glstoolkit.empirics.EmpiricalSample
    :param spec: The operator type.
    :type spec: glstoolkit.bounds.OperatorTypeSpec
    :param p_grid: The exponents, each in (1, b).
    :type p_grid: array_like
    :param slack: The relative tolerance.
    :type slack: float, optional
    :param config: The scenario to echo.
    :type config: ScenarioConfig, optional
    :return: The report.
    :rtype: VerificationReport
    """
    rows = []
    growth = []
    for p in p_grid:
        p = float(p)
        if not 1 < p < spec.b:
            raise DomainError('type checks need 1 < p < b={}, got p={}'.format(spec.b, p))
        input_norm = lp_norm(f, p)
        output_norm = lp_norm(g, p)
        bound = float(spec.factor(p))*input_norm
        ratio = _ratio(output_norm, bound, p)
        if input_norm > 0:
            growth.append(output_norm/input_norm)
        rows.append({'p': p, 'input_norm': input_norm, 'output_norm': output_norm, 'bound': bound, 'ratio': ratio})

    max_ratio = max((row['ratio'] for row in rows), default=0.)
    flags = []
    if rows and not growth:
        flags.append('vacuous')
    if growth and min(growth) >= 1.:
        flags.append('norm_at_least_one')
    summary = {'max_ratio': max_ratio,
               'min_growth': min(growth) if growth else None,
               'fitted_Z': fit_type_constant(f, g, spec.lam, spec.nu, [row['p'] for row in rows]),
               'spec': spec.to_dict()}
    return VerificationReport('type', max_ratio <= 1. + slack, float(slack), rows, summary, flags,
                              config.to_dict() if config is not None else None)


def verify_gls_propagation(f, g, psi, spec, slack=utils.MONTE_CARLO_SLACK, grid=None, config=None):
    """Checks the propagated Grand Lebesgue norm bound on simulated data.

    The norm of f in the space of psi is estimated, propagated through the
    operator type and compared with the estimated norm of g in the target
    space (psi itself, or zeta when lambda > nu).

    :param f: The input sample.
    :type f: glstoolkit.empirics.EmpiricalSample
    :param g: The output sample.
    :type g: glstoolkit.empirics.EmpiricalSample
    :param psi: The generating function of the input space.
    :type psi: glstoolkit.psi.GeneratingFunction
    :param spec: The operator type.
    :type spec: glstoolkit.bounds.OperatorTypeSpec
    :param slack: The relative tolerance.
    :type slack: float, optional
    :param grid: The p-grid. Defaults to psi.grid().
    :type grid: numpy.ndarray, optional
    :param config: The scenario to echo.
    :type config: ScenarioConfig, optional
    :return: The report.
    :rtype: VerificationReport
    """
    grid = psi.grid() if grid is None else np.asarray(grid, dtype=float)
    input_report = gls_norm(moment_profile(f, grid), psi)
    bound = propagate(spec, psi, input_report.value)
    target = target_function(bound)
    target_grid = grid[(grid >= target.lower) & (grid < target.b)]
    output_profile = moment_profile(g, target_grid)
    output_report = gls_norm(output_profile, target)

    envelope = target.evaluate(target_grid)
    rows = []
    for p, output_norm, shape in zip(target_grid, output_profile.norms, envelope):
        p_bound = bound.value*shape
        rows.append({'p': float(p), 'input_norm': lp_norm(f, p), 'output_norm': float(output_norm),
                     'bound': p_bound, 'ratio': _ratio(float(output_norm), p_bound, p)})
    flags = []
    if bound.value == 0 and output_report.value == 0:
        flags.append('vacuous')
    if input_report.at_grid_edge or output_report.at_grid_edge:
        flags.append('grid_edge')
    passed = output_report.value <= bound.value*(1. + slack)
    summary = {'input_gls_norm': input_report.value,
               'output_gls_norm': output_report.value,
               'bound': bound.to_dict(),
               'spec': spec.to_dict()}
    return VerificationReport('gls', passed, float(slack), rows, summary, flags,
                              config.to_dict() if config is not None else None)


def dyadic_martingale(f_inf, levels):
    """Computes the conditional expectations of a grid function on dyadic intervals.

    :param f_inf: The function on a uniform grid of [0, 1] with 2^K cells.
    :type f_inf: glstoolkit.empirics.EmpiricalSample
    :param levels: The number of levels n = 0..levels to return, levels <= K.
    :type levels: int
    :return: The samples f_0, ..., f_levels on the same grid.
    :rtype: list
    """
    size = len(f_inf)
    depth = int(round(math.log2(size)))
    if 2**depth != size or not np.allclose(f_inf.weights, 1./size, rtol=0., atol=1e-15):
        raise IncompatibleGridError('dyadic martingales need a uniform grid of 2^K cells, got {}'.format(size))
    if not 0 <= levels <= depth:
        raise PreconditionError('levels must lie in [0, {}], got {}'.format(depth, levels))
    martingale = []
    for n in range(levels + 1):
        blocks = f_inf.values.reshape(2**n, -1)
        martingale.append(EmpiricalSample(np.repeat(blocks.mean(axis=1), blocks.shape[1]), f_inf.weights))
    return martingale


def verify_convergence(sequence, limit, zeta, tau, threshold=1e-2, grid=None):
    """Checks that g_n -> g in the space of tau for a sequence bounded in the space of zeta.

    Convergence in the larger space needs zeta << tau. The check passes when
    the distances ||g_n - g|| in the space of tau are nonincreasing over the
    last quarter of the sequence and the last one is at most the threshold.

    :param sequence: The samples g_n on a common probability grid.
    :type sequence: list
    :param limit: The limit sample g.
    :type limit: glstoolkit.empirics.EmpiricalSample
    :param zeta: The generating function bounding the sequence.
    :type zeta: glstoolkit.psi.GeneratingFunction
    :param tau: The generating function of the convergence space.
    :type tau: glstoolkit.psi.GeneratingFunction
    :param threshold: The largest admissible final distance.
    :type threshold: float, optional
    :param grid: The p-grid. Defaults to tau.grid().
    :type grid: numpy.ndarray, optional
    :return: The report; ``summary['distances']`` holds the sequence of distances.
    :rtype: VerificationReport
    """
    if not dominates(zeta, tau):
        raise PreconditionError('convergence in the space of tau needs zeta << tau')
    sequence = list(sequence)
    if not sequence:
        raise PreconditionError('verify_convergence needs a nonempty sequence')
    grid = tau.grid() if grid is None else np.asarray(grid, dtype=float)
    distances = [gls_norm(moment_profile(g - limit, grid), tau).value for g in sequence]
    witness = max(gls_norm(moment_profile(g, grid), zeta).value for g in sequence)
    last = distances[-(-len(distances)//4):]
    decreasing = all(b <= a*(1. + 1e-12) for a, b in zip(last[:-1], last[1:]))
    passed = decreasing and distances[-1] <= threshold
    summary = {'distances': distances, 'sup_norm_zeta': witness, 'threshold': threshold}
    return VerificationReport('convergence', passed, 0., [], summary, [])


def run_scenario(config, progress_obj=None):
    """Simulates a scenario and checks it.

    A missing seed is drawn from system entropy and written back into the
    config, so the report always echoes the seed that produced it.

    :param config: The scenario.
    :type config: ScenarioConfig
    :param progress_obj: The progress bar.
    :type progress_obj: ProgressBar, optional
    :return: The report.
    :rtype: VerificationReport
    """
    if config.seed is None:
        config.seed = generate_seed()
    simulate = {'doob': simulate_doob,
                'dunford-schwartz': simulate_dunford_schwartz,
                'fourier': simulate_fourier_maximal}[config.kind]
    f, g = simulate(config, progress_obj=progress_obj)
    spec = OperatorTypeSpec(config.lam, config.nu, config.Z)
    if config.check == 'gls':
        report = verify_gls_propagation(f, g, make_family(config.psi), spec, config.slack, config=config)
    else:
        report = verify_type(f, g, spec, config.p_grid, config.slack, config=config)
    report.kind = config.kind
    if config.kind == 'dunford-schwartz':
        report.flags.append('necessary_condition')
        report.summary['truncation_level'] = config.steps
    elif config.kind == 'fourier':
        report.flags.append('necessary_condition')
        report.summary['truncation_level'] = config.degree
    return report
