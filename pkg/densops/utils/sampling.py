import numpy as np


def sample_points(dimension: int, count: int, seed: int, low: float = -1.0, high: float = 1.0) -> np.ndarray:
    """Draws reproducible pseudo-random points from the box [low, high]^dimension

    Parameters:
    dimension (int): dimension of the chart
    count (int): number of points
    seed (int): seed of the generator, identical seeds give identical points

    Returns:
    numpy: array of shape (count, dimension)

   """
    rng = np.random.default_rng(seed)
    return rng.uniform(low, high, size=(count, dimension))


def torus_grid(dimension: int, points: int) -> list:
    """
    Periodic grid on [0, 2pi)^dimension with `points` nodes per axis, as returned by numpy.meshgrid.
    """
    axis = np.arange(points) * (2 * np.pi / points)
    return np.meshgrid(*([axis] * dimension), indexing='ij')


def gauss_grid(bounds: list, order: int) -> tuple:
    """
    Tensor Gauss-Legendre nodes and weights for the box given by a list of (low, high) pairs.

    :return: tuple (nodes, weights) where nodes is a list of meshgrid arrays and weights an array of the same shape
    """
    unit_nodes, unit_weights = np.polynomial.legendre.leggauss(order)
    axes = []
    axis_weights = []
    for low, high in bounds:
        half = (high - low) / 2
        axes.append(half * unit_nodes + (high + low) / 2)
        axis_weights.append(half * unit_weights)
    nodes = np.meshgrid(*axes, indexing='ij')
    weights = axis_weights[0]
    for w in axis_weights[1:]:
        weights = np.multiply.outer(weights, w)
    return nodes, weights


def relative_residual(lhs: float, rhs: float) -> float:
    # scaled like the comparisons in the test suites: |a - b| / (1 + |a|)
    return abs(lhs - rhs) / (1 + abs(lhs))


def within_tolerance(lhs: float, rhs: float, tolerance: float) -> bool:
    return abs(lhs - rhs) < tolerance * (1 + abs(lhs))


def get_distance(point_a: np.ndarray, point_b: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(point_a, dtype=float) - np.asarray(point_b, dtype=float)))


def central_difference(function, point: np.ndarray, index: int, step: float) -> float:
    """Approximates the partial derivative of `function` along axis `index` at `point`

    Parameters:
    function (callable): takes the coordinates as positional arguments
    point (numpy): point of evaluation
    index (int): 0-based axis
    step (float): finite difference step

    Returns:
    float: (f(p + h e_i) - f(p - h e_i)) / 2h

   """
    shift = np.zeros(len(point))
    shift[index] = step
    forward = function(*(np.asarray(point) + shift))
    backward = function(*(np.asarray(point) - shift))
    return (forward - backward) / (2 * step)
