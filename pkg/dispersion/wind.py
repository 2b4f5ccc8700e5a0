"""
Mass-consistent diagnostic wind over terrain.

Velocities live on cell faces (staggered grid): u on x-faces (nz, ny, nx+1), v on
y-faces (nz, ny+1, nx) and w on z-faces (nz+1, ny, nx). Faces touching terrain or the
ground carry no flow. Lateral and top boundaries are open.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import cg

from core.exceptions import InvalidArgument, NumericalFailure

logger = logging.getLogger(__name__)

# maximum divergence accepted after projection, relative to speed / min cell size
DIVERGENCE_TOLERANCE = 1e-6


@dataclass(frozen=True)
class VelocityField:
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    cell_size_zyx: tuple
    fluid: np.ndarray

    def __post_init__(self):
        nz, ny, nx = self.fluid.shape
        expected = {'u': (nz, ny, nx + 1), 'v': (nz, ny + 1, nx), 'w': (nz + 1, ny, nx)}
        for name, shape in expected.items():
            component = getattr(self, name)
            if component.shape != shape:
                raise InvalidArgument(f'{name} has shape {component.shape}, expected {shape}')
            if not np.all(np.isfinite(component)):
                raise InvalidArgument(f'{name} contains non-finite values')

    @property
    def grid_shape(self):
        return self.fluid.shape

    def divergence(self):
        """
        Discrete divergence per cell (1/s); zero inside the terrain.
        """

        return face_divergence(self.u, self.v, self.w, self.cell_size_zyx)

    def cell_centered(self):
        """
        Velocity components averaged from faces to cell centres.
        """

        uc = 0.5 * (self.u[:, :, 1:] + self.u[:, :, :-1])
        vc = 0.5 * (self.v[:, 1:, :] + self.v[:, :-1, :])
        wc = 0.5 * (self.w[1:] + self.w[:-1])
        return uc, vc, wc

    def max_component(self):
        return max(np.abs(self.u).max(), np.abs(self.v).max(), np.abs(self.w).max())


def face_divergence(u, v, w, cell_size_zyx):
    dz, dy, dx = cell_size_zyx
    return (
        (u[:, :, 1:] - u[:, :, :-1]) / dx
        + (v[:, 1:, :] - v[:, :-1, :]) / dy
        + (w[1:] - w[:-1]) / dz
    )


def log_wind_profile(height, speed, reference_height, roughness_length, cap_height=None):
    """
    Logarithmic-law speed at 'height' above ground, equal to 'speed' at the reference
    height and constant above 'cap_height'.
    """

    height = np.maximum(np.asarray(height, dtype=np.float64), 0.0)
    if cap_height is not None:
        height = np.minimum(height, cap_height)
    z0 = roughness_length
    return speed * np.log((height + z0) / z0) / np.log((reference_height + z0) / z0)


def open_faces(fluid):
    """
    Masks of the faces that may carry flow along each axis.
    """

    u_open = np.zeros(fluid.shape[:2] + (fluid.shape[2] + 1,), dtype=bool)
    u_open[:, :, 1:-1] = fluid[:, :, :-1] & fluid[:, :, 1:]
    u_open[:, :, 0] = fluid[:, :, 0]
    u_open[:, :, -1] = fluid[:, :, -1]

    v_open = np.zeros((fluid.shape[0], fluid.shape[1] + 1, fluid.shape[2]), dtype=bool)
    v_open[:, 1:-1, :] = fluid[:, :-1, :] & fluid[:, 1:, :]
    v_open[:, 0, :] = fluid[:, 0, :]
    v_open[:, -1, :] = fluid[:, -1, :]

    # the ground face (k = 0) is a wall
    w_open = np.zeros((fluid.shape[0] + 1,) + fluid.shape[1:], dtype=bool)
    w_open[1:-1] = fluid[:-1] & fluid[1:]
    w_open[-1] = fluid[-1]

    return u_open, v_open, w_open


def _initial_field(terrain, condition, config, fluid):
    nz = fluid.shape[0]
    dz = config.cell_size_zyx[0]
    ground = terrain.ground_index(dz, nz) * dz
    levels = (np.arange(nz) + 0.5)[:, None, None] * dz

    # ground height under each face: the higher of the two adjacent columns
    ground_u = np.concatenate([ground[:, :1], np.maximum(ground[:, :-1], ground[:, 1:]), ground[:, -1:]], axis=1)
    ground_v = np.concatenate([ground[:1, :], np.maximum(ground[:-1, :], ground[1:, :]), ground[-1:, :]], axis=0)

    def profile(ground_height):
        return log_wind_profile(
            levels - ground_height[None, :, :],
            condition.speed_ms,
            config.reference_height,
            config.roughness_length,
            config.profile_cap_height,
        )

    east, north = condition.unit_vector()
    u_open, v_open, w_open = open_faces(fluid)
    u = east * profile(ground_u) * u_open
    v = north * profile(ground_v) * v_open
    w = np.zeros(w_open.shape, dtype=np.float64)

    return (u, v, w), (u_open, v_open, w_open)


def _pressure_operator(fluid, opens, cell_size_zyx):
    """
    Assembles the negated face-gradient Laplacian over fluid cells: zero-flux at walls,
    zero potential at open boundaries. Solving it against the divergence gives the
    potential whose gradient cancels that divergence.
    """

    u_open, v_open, w_open = opens
    dz, dy, dx = cell_size_zyx
    index = np.full(fluid.shape, -1, dtype=np.int64)
    n = int(fluid.sum())
    index[fluid] = np.arange(n)

    rows, cols, vals = [], [], []

    def couple(p, q, g):
        rows.extend([p, q, p, q])
        cols.extend([q, p, p, q])
        vals.extend([np.full(p.size, -g), np.full(p.size, -g), np.full(p.size, g), np.full(p.size, g)])

    def open_boundary(p, g):
        rows.append(p)
        cols.append(p)
        vals.append(np.full(p.size, 2.0 * g))

    for axis, spacing, open_mask in ((2, dx, u_open), (1, dy, v_open), (0, dz, w_open)):
        g = 1.0 / spacing ** 2
        lower = [slice(None)] * 3
        upper = [slice(None)] * 3
        inner = [slice(None)] * 3
        lower[axis] = slice(None, -1)
        upper[axis] = slice(1, None)
        inner[axis] = slice(1, -1)
        interior = open_mask[tuple(inner)]
        couple(index[tuple(lower)][interior], index[tuple(upper)][interior], g)

        last = [slice(None)] * 3
        last[axis] = -1
        open_boundary(index[tuple(last)][open_mask[tuple(last)]], g)
        if axis != 0:
            first = [slice(None)] * 3
            first[axis] = 0
            open_boundary(index[tuple(first)][open_mask[tuple(first)]], g)

    matrix = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsr()

    return matrix, index


def _apply_correction(field, opens, phi, cell_size_zyx):
    u, v, w = field
    u_open, v_open, w_open = opens
    dz, dy, dx = cell_size_zyx

    u[:, :, 1:-1] += u_open[:, :, 1:-1] * (phi[:, :, 1:] - phi[:, :, :-1]) / dx
    u[:, :, 0] += u_open[:, :, 0] * phi[:, :, 0] / (0.5 * dx)
    u[:, :, -1] -= u_open[:, :, -1] * phi[:, :, -1] / (0.5 * dx)

    v[:, 1:-1, :] += v_open[:, 1:-1, :] * (phi[:, 1:, :] - phi[:, :-1, :]) / dy
    v[:, 0, :] += v_open[:, 0, :] * phi[:, 0, :] / (0.5 * dy)
    v[:, -1, :] -= v_open[:, -1, :] * phi[:, -1, :] / (0.5 * dy)

    w[1:-1] += w_open[1:-1] * (phi[1:] - phi[:-1]) / dz
    w[-1] -= w_open[-1] * phi[-1] / (0.5 * dz)


def build_wind_field(terrain, condition, config):
    """
    Log-law horizontal wind blowing from condition.direction_deg, blocked by the terrain
    and made divergence-free by a single projection step (u = u0 + grad(phi)).
    """

    nz, ny, nx = config.grid_cells_zyx
    if terrain.shape != (ny, nx):
        raise InvalidArgument(f'terrain grid {terrain.shape} does not match the configured grid {(ny, nx)}')

    dz = config.cell_size_zyx[0]
    fluid = ~terrain.solid_mask(dz, nz)
    field, opens = _initial_field(terrain, condition, config, fluid)

    divergence = face_divergence(*field, config.cell_size_zyx)
    scale = condition.speed_ms / config.min_cell_size
    rhs = divergence[fluid]

    if np.any(rhs != 0):
        matrix, _ = _pressure_operator(fluid, opens, config.cell_size_zyx)
        preconditioner = sparse.diags(1.0 / matrix.diagonal())
        iterations = 0

        def count(_):
            nonlocal iterations
            iterations += 1

        solution, info = cg(
            matrix,
            rhs,
            rtol=0.0,
            atol=config.projection_tolerance * scale,
            maxiter=config.projection_max_iterations,
            M=preconditioner,
            callback=count,
        )
        residual = float(np.linalg.norm(rhs - matrix @ solution))
        if info != 0:
            raise NumericalFailure(
                f'wind projection did not converge after {iterations} iterations (residual {residual:.3e})',
                residual=residual,
            )

        phi = np.zeros(fluid.shape, dtype=np.float64)
        phi[fluid] = solution
        _apply_correction(field, opens, phi, config.cell_size_zyx)
        logger.info('wind projection converged in %d iterations (residual %.3e)', iterations, residual)

    velocity = VelocityField(*field, cell_size_zyx=config.cell_size_zyx, fluid=fluid)

    max_divergence = float(np.abs(velocity.divergence()).max())
    if max_divergence > DIVERGENCE_TOLERANCE * max(scale, np.finfo(float).tiny):
        raise NumericalFailure(
            f'projected wind keeps divergence {max_divergence:.3e} 1/s', residual=max_divergence
        )

    return velocity
