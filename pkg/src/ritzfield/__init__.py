"""ritzfield: variational neural solver for periodic phase-field steady states.

Submodules (import what you need; nothing heavy loads at package import):

* ``features``  -- Fourier feature lifts (random / cartesian / separable / hybrid)
* ``network``   -- residual network with a global linear bypass
* ``autodiff``  -- mixed-mode differentiation kernel (exact gradients)
* ``sampling``  -- Sobol batches and uniform grids
* ``loss``      -- interface energy, mass constraint, boundary penalty
* ``optim``     -- Adam and two-loop L-BFGS with strong Wolfe search
* ``driver``    -- nested training loop with multiplier updates
* ``oracle``    -- independent grid-based energies and projected descent
* ``patterns``  -- stripe/droplet classification, bimodality checks
* ``fieldio``   -- field files (CSV / VTK structured points) and checkpoints
* ``cli``       -- command-line interface (run, gradcheck, oracle, export, compare)
"""

__version__ = "0.1.0"
