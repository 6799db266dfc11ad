from hypothesis import HealthCheck, settings

# Property tests must behave identically run to run; derandomize so the
# example stream is a pure function of the test code.
settings.register_profile(
    "ci",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("ci")
