import math
import numpy as np
from scipy.special import expit
from glstoolkit.exceptions import NoFiniteValueError

# ratio of the golden section
PHI_RATIO = 2 / (1 + math.sqrt(5))
# relative distance of the outermost grid nodes from an open endpoint
EDGE = 1e-12


def p_grid(b, n, p_max):
    """Creates the evaluation grid on [1, b) shared by all modules.

    For an infinite support bound (or one beyond the cap) the grid is
    geometric in p on [1, p_max]. For a finite bound the distances to b are
    geometric, so the grid resolves p -> b without ever reaching it.

    :param b: The support bound.
    :type b: float
    :param n: The number of nodes.
    :type n: int
    :param p_max: The truncation cap.
    :type p_max: float
    :return: The increasing grid, starting at exactly 1.
    :rtype: numpy.ndarray
    """
    if b > p_max:
        grid = np.geomspace(1., p_max, n)
    else:
        grid = b - (b - 1.)*np.geomspace(1., EDGE, n)
    grid[0] = 1.
    return grid


def open_grid(b, n, p_max):
    """Creates a grid on the open interval (1, b) that accumulates at both ends.

    :param b: The support bound.
    :type b: float
    :param n: The number of nodes.
    :type n: int
    :param p_max: The truncation cap used when b is infinite or beyond the cap.
    :type p_max: float
    :return: The increasing grid.
    :rtype: numpy.ndarray
    """
    if b > p_max:
        return 1. + np.geomspace(EDGE, p_max - 1., n)
    reach = math.log(1./EDGE)
    t = expit(np.linspace(-reach, reach, n))
    return 1. + (b - 1.)*t


def golden_section(func, lo, hi, tol=1e-10, max_iterations=200):
    """Minimizes a scalar function on a closed interval by golden-section search.

    The endpoints are compared against the interior result, so infima that are
    attained at an end of the interval are returned there.

    :param func: The function to minimize.
    :type func: callable
    :param lo: The lower end of the interval.
    :type lo: float
    :param hi: The upper end of the interval.
    :type hi: float
    :param tol: The relative width at which the search stops.
    :type tol: float, optional
    :param max_iterations: The maximum number of iterations.
    :type max_iterations: int, optional
    :return: The argmin and the minimum.
    :rtype: tuple
    """
    lo0, hi0 = lo, hi
    x1 = hi - PHI_RATIO*(hi - lo)
    x2 = lo + PHI_RATIO*(hi - lo)
    f1 = func(x1)
    f2 = func(x2)
    iteration = 0
    while iteration < max_iterations and (hi - lo) > tol*max(1., abs(lo) + abs(hi)):
        if f2 > f1:
            hi = x2
            x2 = x1
            f2 = f1
            x1 = hi - PHI_RATIO*(hi - lo)
            f1 = func(x1)
        else:
            lo = x1
            x1 = x2
            f1 = f2
            x2 = lo + PHI_RATIO*(hi - lo)
            f2 = func(x2)
        iteration += 1

    candidates = [(0.5*(lo + hi), func(0.5*(lo + hi))), (x1, f1), (x2, f2),
                  (lo0, func(lo0)), (hi0, func(hi0))]
    candidates = [c for c in candidates if not math.isnan(c[1])]
    return min(candidates, key=lambda c: c[1])


def minimize_on_grid(func, grid, tol=1e-10):
    """Minimizes a function by a grid scan followed by one golden-section pass.

    The refinement runs on the interval between the neighbours of the best
    grid node.

    :param func: The function to minimize; must accept both arrays and scalars.
    :type func: callable
    :param grid: The increasing grid to scan.
    :type grid: numpy.ndarray
    :param tol: The refinement tolerance.
    :type tol: float, optional
    :return: The argmin, the minimum and the index of the best grid node.
    :rtype: tuple
    """
    values = np.asarray(func(grid), dtype=float)
    finite = np.isfinite(values)
    if not finite.any():
        raise NoFiniteValueError('no finite value on the grid [{:.6g}, {:.6g}]'.format(grid[0], grid[-1]))
    index = int(np.argmin(np.where(finite, values, np.inf)))
    lo = grid[max(index - 1, 0)]
    hi = grid[min(index + 1, len(grid) - 1)]
    if lo == hi:
        return float(grid[index]), float(values[index]), index
    x, fx = golden_section(lambda x: float(func(x)), lo, hi, tol=tol)
    if not fx <= values[index]:
        x, fx = grid[index], values[index]
    return float(x), float(fx), index
