"""One run: ground state, excitation protocol, propagation, sampled observables."""
import logging
from typing import Tuple

from models.run import Representation, RunConfig, SolverMethod
from models.system import CoordinateFrame, Symmetry, SystemSpec
from models.timeseries import DEFAULT_CHANNELS, TRAP, TimeSeries
from models.wavefunction import SeparatedWavefunction, Wavefunction
from services.excitation import trap_factor
from services.grid_propagator import default_grid, propagator_for
from services.observables import TimeSeriesRecorder, measure
from services.oscillator_basis import basis_propagator_for


def computational_spec(spec: SystemSpec) -> SystemSpec:
    """System actually propagated: bare 1D even states are reached through the odd sector.

    Every observable recorded here depends on |psi| only, which the mapping preserves.
    """
    if spec.needs_bose_fermi_mapping:
        return spec.with_symmetry(Symmetry.ANTISYMMETRIC)
    return spec


class Simulation:
    def __init__(self, config: RunConfig):
        self.config = config
        self.requested = config.system
        self.spec = computational_spec(config.system)
        self.mapped = self.spec is not self.requested
        self.dt = config.solver.resolved_time_step

        settings = config.solver
        if settings.representation is Representation.PAIR:
            frames = [CoordinateFrame.TWO_PARTICLE]
        else:
            frames = [CoordinateFrame.CENTER_OF_MASS, CoordinateFrame.RELATIVE]

        if settings.method is SolverMethod.GRID:
            self.propagators = [propagator_for(self.spec, default_grid(self.spec, frame, settings.grid_points), frame)
                                for frame in frames]
        else:
            self.propagators = [basis_propagator_for(self.spec, frame, self._basis_size(frame))
                                for frame in frames]

    def _basis_size(self, frame: CoordinateFrame) -> int:
        size = self.config.solver.resolved_basis_size
        # the center of mass stays near its ground state; a quarter of the relative basis is ample
        if frame is CoordinateFrame.CENTER_OF_MASS:
            return max(20, size // 4)
        return size

    def _pack(self, states) -> Wavefunction:
        if len(states) == 1:
            return states[0]
        return SeparatedWavefunction(center_of_mass=states[0], relative=states[1])

    def _unpack(self, state: Wavefunction):
        if isinstance(state, SeparatedWavefunction):
            return [state.center_of_mass, state.relative]
        return [state]

    def ground_state(self) -> Tuple[Wavefunction, float]:
        settings = self.config.solver
        states = []
        energy = 0.0
        for propagator in self.propagators:
            if settings.method is SolverMethod.GRID:
                psi, e = propagator.ground_state(dtau=settings.imaginary_time_step,
                                                 tolerance=settings.imaginary_time_tolerance)
            else:
                psi, e = propagator.ground_state()
            states.append(psi)
            energy += e
        logging.info(f"Ground state at lambda={self.spec.coupling}: E0 = {energy:.10f}")
        return self._pack(states), energy

    def step(self, state: Wavefunction, factor: float) -> Wavefunction:
        advanced = [propagator.step_real_time(psi, factor, self.dt)
                    for propagator, psi in zip(self.propagators, self._unpack(state))]
        return self._pack(advanced)

    def propagate(self, state: Wavefunction) -> TimeSeries:
        config = self.config
        steps = int(round(config.duration / self.dt))
        stride = max(1, int(round(config.sample_interval / self.dt)))
        recorder = TimeSeriesRecorder(channels=DEFAULT_CHANNELS + (TRAP,), metadata=config.model_dump(mode="json"))

        def sample(t):
            factor = trap_factor(config.protocol, t)
            values = measure(state, self.spec, factor)
            values[TRAP] = factor
            recorder.record(t, values)

        sample(0.0)
        for n in range(steps):
            midpoint = (n + 0.5) * self.dt
            state = self.step(state, trap_factor(config.protocol, midpoint))
            if (n + 1) % stride == 0:
                sample((n + 1) * self.dt)
        logging.info(f"Propagated {steps} steps to t={steps * self.dt:.2f}")
        return recorder.build()

    def run(self) -> Tuple[TimeSeries, float]:
        state, energy = self.ground_state()
        return self.propagate(state), energy
