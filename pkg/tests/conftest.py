from hypothesis import settings

# property tests share time with the statistical suite; no per-example deadline
settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")
