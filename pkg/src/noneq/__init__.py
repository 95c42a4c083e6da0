"""Dissipative dynamics and entanglement of two emitters near a hot slab.

Subpackages split along the physics pipeline: ``material`` (permittivity
models), ``scattering`` (slab Fresnel amplitudes), ``correlators`` (field
correlator quadrature), ``rates`` (transition rates), ``dynamics`` (master
equation), ``entanglement`` (concurrence), plus ``config``, ``sweep`` and
``cli`` for batch work.
"""

__version__ = "0.1.0"
