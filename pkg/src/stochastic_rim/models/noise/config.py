class NoiseConfig:
    # Grid step of the stored paths
    dt = 0.005
    # History kept before t = 0 (enough for e^{-tail} below 1e-15)
    tail = 50.0
    # Forward horizon
    horizon = 3.0
    # Initialisation of the OU recursion at t_start
    ou_mode = "zero_tail"

    def __init__(self, **overrides):
        for key, value in overrides.items():
            if not hasattr(type(self), key):
                raise AttributeError(f"NoiseConfig has no setting {key!r}")
            setattr(self, key, value)
