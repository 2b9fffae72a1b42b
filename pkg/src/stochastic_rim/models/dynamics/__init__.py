from .trajectory import Trajectory, to_u, to_v, z_at
from .integrators import ForwardNoise, integrate_v, linear_benchmark_solution
from .reduced import integrate_reduced, quadratic_h, reduced_vector_field
from .amplitude import amplitude_drift, integrate_amplitude
