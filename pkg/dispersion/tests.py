import numpy as np
from django.test import SimpleTestCase

from core.exceptions import InvalidArgument, InvalidConfig
from corpus.sequence import ConcentrationSequence

from .conditions import SimConfig, SourceSpec, WindCondition
from .generator import simulate_condition, subsample_output
from .sampling import sample_conditions
from .serializers import SimulationSerializer
from .solver import AdvectionDiffusionSolver, run_release, simulate_release
from .terrain import TerrainField, generate_terrain
from .wind import DIVERGENCE_TOLERANCE, VelocityField, build_wind_field


def small_config(**overrides):
    settings = dict(
        domain_extent_zyx=(400.0, 2000.0, 2000.0),
        grid_cells_zyx=(20, 20, 20),
        dt_output=60.0,
        n_output_steps=3,
        duration=180.0,
        terrain_amplitude=0.0,
        terrain_correlation_length=500.0,
        terrain_features=6,
    )
    settings.update(overrides)
    return SimConfig(**settings)


def still_air(config):
    nz, ny, nx = config.grid_cells_zyx
    return VelocityField(
        u=np.zeros((nz, ny, nx + 1)),
        v=np.zeros((nz, ny + 1, nx)),
        w=np.zeros((nz + 1, ny, nx)),
        cell_size_zyx=config.cell_size_zyx,
        fluid=np.ones((nz, ny, nx), dtype=bool),
    )


class SampleConditionsTests(SimpleTestCase):

    def test_one_sample_per_stratum(self):
        conditions = sample_conditions(10, seed=7)

        speeds = sorted(c.speed_ms for c in conditions)
        directions = sorted(c.direction_deg for c in conditions)
        for k in range(10):
            self.assertTrue(1.5 + 0.85 * k <= speeds[k] < 1.5 + 0.85 * (k + 1))
            self.assertTrue(340.0 + 2.0 * k <= directions[k] < 340.0 + 2.0 * (k + 1))

    def test_hundred_runs_inside_ranges(self):
        conditions = sample_conditions(100, seed=0)

        self.assertEqual(len(conditions), 100)
        for condition in conditions:
            self.assertTrue(1.5 <= condition.speed_ms <= 10.0)
            self.assertTrue(340.0 <= condition.direction_deg <= 360.0)

    def test_single_sample(self):
        (condition,) = sample_conditions(1, seed=3)
        self.assertTrue(1.5 <= condition.speed_ms <= 10.0)

    def test_deterministic_given_seed(self):
        self.assertEqual(sample_conditions(20, seed=5), sample_conditions(20, seed=5))

    def test_non_positive_count_rejected(self):
        with self.assertRaises(InvalidArgument):
            sample_conditions(0, seed=1)


class WindConditionTests(SimpleTestCase):

    def test_out_of_range_speed_rejected(self):
        with self.assertRaises(InvalidArgument):
            WindCondition(speed_ms=12.0, direction_deg=350.0)

    def test_north_wind_blows_south(self):
        east, north = WindCondition(speed_ms=5.0, direction_deg=360.0).unit_vector()
        self.assertAlmostEqual(east, 0.0, places=12)
        self.assertAlmostEqual(north, -1.0, places=12)


class SimConfigTests(SimpleTestCase):

    def test_outputs_must_cover_duration(self):
        with self.assertRaises(InvalidConfig):
            small_config(n_output_steps=2, duration=180.0)

    def test_record_interval_must_divide_output(self):
        with self.assertRaises(InvalidConfig):
            small_config(record_interval=25.0)

    def test_serializer_defers_to_config_checks(self):
        serializer = SimulationSerializer(data={'n_output_steps': 2, 'duration': 19800})
        self.assertFalse(serializer.is_valid())

    def test_serializer_builds_config(self):
        serializer = SimulationSerializer(data={'grid_cells_zyx': [10, 20, 20], 'diffusivity': 5})
        self.assertTrue(serializer.is_valid(), serializer.errors)

        config = SimulationSerializer.to_config(serializer.validated_data)
        self.assertEqual(config.grid_cells_zyx, (10, 20, 20))
        self.assertEqual(config.diffusivity, 5.0)
        self.assertEqual(config.dt_output, 600.0)


class TerrainTests(SimpleTestCase):

    def test_zero_amplitude_is_flat(self):
        terrain = generate_terrain(small_config(), seed=1)
        self.assertTrue(np.all(terrain.heights == 0))

    def test_same_seed_is_bit_identical(self):
        config = small_config(terrain_amplitude=150.0)
        first = generate_terrain(config, seed=4)
        second = generate_terrain(config, seed=4)
        np.testing.assert_array_equal(first.heights, second.heights)

    def test_seeds_differ(self):
        config = small_config(terrain_amplitude=150.0)
        self.assertFalse(np.array_equal(generate_terrain(config, 1).heights, generate_terrain(config, 2).heights))

    def test_relief_spans_amplitude(self):
        terrain = generate_terrain(small_config(terrain_amplitude=150.0), seed=3)
        self.assertAlmostEqual(terrain.heights.min(), 0.0)
        self.assertAlmostEqual(terrain.heights.max(), 150.0)

    def test_solid_cells_lie_below_surface(self):
        terrain = TerrainField(heights=np.array([[0.0, 25.0], [35.0, 100.0]]), cell_size_xy=(1.0, 1.0), seed=0)
        np.testing.assert_array_equal(terrain.ground_index(20.0, 10), [[0, 1], [2, 5]])


class WindFieldTests(SimpleTestCase):

    def test_flat_north_wind_at_reference_height(self):
        config = small_config()
        wind = build_wind_field(generate_terrain(config, 0), WindCondition(6.0, 360.0), config)

        # the lowest cell centre sits at the 10 m reference height
        self.assertLess(np.abs(wind.u[0]).max(), 1e-6)
        np.testing.assert_allclose(wind.v[0], -6.0, atol=1e-6)
        self.assertEqual(np.abs(wind.w).max(), 0.0)

    def test_flat_speed_at_reference_height(self):
        config = small_config()
        wind = build_wind_field(generate_terrain(config, 0), WindCondition(4.2, 347.0), config)

        speed = np.hypot(wind.u[0, :, 0], wind.v[0, 0, :])
        np.testing.assert_allclose(speed, 4.2, atol=1e-6)

    def test_hilly_projection_is_divergence_free(self):
        config = small_config(terrain_amplitude=150.0)
        condition = WindCondition(5.0, 352.0)
        wind = build_wind_field(generate_terrain(config, 11), condition, config)

        bound = DIVERGENCE_TOLERANCE * condition.speed_ms / config.min_cell_size
        self.assertLess(np.abs(wind.divergence()).max(), bound)

    def test_no_penetration_at_ground(self):
        config = small_config(terrain_amplitude=150.0)
        wind = build_wind_field(generate_terrain(config, 11), WindCondition(5.0, 352.0), config)

        self.assertEqual(np.abs(wind.w[0]).max(), 0.0)
        solid = ~wind.fluid
        # faces of solid cells carry no flow
        self.assertEqual(np.abs(wind.w[1:][solid]).max(initial=0.0), 0.0)
        self.assertEqual(np.abs(wind.u[:, :, 1:][solid]).max(initial=0.0), 0.0)

    def test_mismatched_terrain_rejected(self):
        config = small_config()
        terrain = TerrainField(heights=np.zeros((5, 5)), cell_size_xy=(1.0, 1.0), seed=0)
        with self.assertRaises(InvalidArgument):
            build_wind_field(terrain, WindCondition(5.0, 350.0), config)


class SolverTests(SimpleTestCase):

    def test_still_air_keeps_mass_in_source_cell(self):
        config = small_config(diffusivity=0.0)
        terrain = generate_terrain(config, 0)
        source = SourceSpec(x_release=1000.0, y_release=1000.0, emission_rate=2.0)

        sequence = simulate_release(terrain, still_air(config), source, config)

        dz, dy, dx = config.cell_size_zyx
        volume = dx * dy * dz
        for frame in range(sequence.n_steps):
            elapsed = (frame + 1) * config.dt_output
            self.assertAlmostEqual(sequence.values[frame, 1, 10, 10] * volume, 2.0 * elapsed, places=6)
            self.assertAlmostEqual(sequence.values[frame].sum() * volume, 2.0 * elapsed, places=6)

    def test_mass_balance_over_sampled_conditions(self):
        config = small_config(terrain_amplitude=150.0)
        terrain = generate_terrain(config, 5)
        source = SourceSpec(x_release=1000.0, y_release=1000.0)

        for condition in sample_conditions(10, seed=3):
            wind = build_wind_field(terrain, condition, config)
            sequence, ledger = run_release(terrain, wind, source, config)

            self.assertEqual(sequence.n_steps, 3)
            self.assertLess(ledger.max_residual, 1e-6)
            self.assertGreaterEqual(sequence.values.min(), 0.0)

    def test_decay_enters_ledger(self):
        config = small_config(decay_halflife=30.0)
        terrain = generate_terrain(config, 0)
        wind = build_wind_field(terrain, WindCondition(3.0, 355.0), config)

        _, ledger = run_release(terrain, wind, SourceSpec(x_release=1000.0, y_release=1000.0), config)

        self.assertGreater(ledger.decayed[-1], 0.0)
        self.assertLess(ledger.max_residual, 1e-6)

    def test_plume_moves_south_southeast(self):
        config = small_config(
            domain_extent_zyx=(500.0, 4000.0, 4000.0),
            grid_cells_zyx=(10, 40, 40),
            dt_output=60.0,
            n_output_steps=4,
            duration=240.0,
        )
        sequence, _ = simulate_condition(
            WindCondition(5.7, 350.5), config, source=SourceSpec(x_release=2000.0, y_release=3800.0)
        )

        column_mass = sequence.values.sum(axis=1)
        y = (np.arange(40) + 0.5)[None, :, None]
        x = (np.arange(40) + 0.5)[None, None, :]
        total = column_mass.sum(axis=(1, 2))
        centroid_y = (column_mass * y).sum(axis=(1, 2)) / total
        centroid_x = (column_mass * x).sum(axis=(1, 2)) / total

        self.assertTrue(np.all(np.diff(centroid_y) < 0))
        self.assertGreater(centroid_x[-1], centroid_x[0])
        self.assertGreater(centroid_y[0] - centroid_y[-1], centroid_x[-1] - centroid_x[0])

    def test_courant_violation_refused(self):
        config = small_config(dt_solver=30.0)
        terrain = generate_terrain(config, 0)
        wind = build_wind_field(terrain, WindCondition(8.0, 350.0), config)

        with self.assertRaises(InvalidConfig):
            AdvectionDiffusionSolver(terrain, wind, SourceSpec(x_release=1000.0, y_release=1000.0), config)

    def test_source_outside_domain_rejected(self):
        config = small_config()
        terrain = generate_terrain(config, 0)
        with self.assertRaises(InvalidArgument):
            simulate_release(terrain, still_air(config), SourceSpec(x_release=5000.0, y_release=5000.0), config)

    def test_identical_inputs_are_bit_identical(self):
        config = small_config(terrain_amplitude=150.0)
        condition = WindCondition(4.0, 345.0)
        source = SourceSpec(x_release=1000.0, y_release=1000.0)

        first, _ = simulate_condition(condition, config, source=source, terrain_seed=2)
        second, _ = simulate_condition(condition, config, source=source, terrain_seed=2)
        np.testing.assert_array_equal(first.values, second.values)


class SubsampleTests(SimpleTestCase):

    def test_keeps_last_frame_of_each_group(self):
        values = np.arange(6, dtype=float)[:, None, None, None] * np.ones((6, 1, 1, 1))
        sequence = ConcentrationSequence(values, dt_output=60.0, cell_size_zyx=(1, 1, 1), release_offset=60.0)

        coarse = subsample_output(sequence, 3)

        np.testing.assert_array_equal(coarse.values[:, 0, 0, 0], [2.0, 5.0])
        self.assertEqual(coarse.dt_output, 180.0)
        self.assertEqual(coarse.release_offset, 180.0)

    def test_recorded_frames_cover_outputs(self):
        config = small_config(record_interval=20.0)
        terrain = generate_terrain(config, 0)
        wind = build_wind_field(terrain, WindCondition(3.0, 355.0), config)
        fine, _ = run_release(terrain, wind, SourceSpec(x_release=1000.0, y_release=1000.0), config)

        self.assertEqual(fine.n_steps, 9)
        self.assertEqual(subsample_output(fine, config.recording_stride).n_steps, 3)
