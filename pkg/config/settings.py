"""
Configuration settings for metrifract metric-geometry toolkit
"""

# Metric validation
EXHAUSTIVE_TRIPLE_LIMIT = 300
SAMPLED_TRIPLES = 100_000
DEFAULT_SEED = 0

# Slow schedules
DEFAULT_SCHEDULE_NMAX = 8

# Cantor systems
DEFAULT_P_MAX = 30
SHIFT_CHUNK_SIZE = 128

# Gauges
GAUGE_GRID_DENSITY = 64
GAUGE_DEFAULT_DECADES = 40
HAT_BETA_TOLERANCE = 0.05
PSI_BOUNDED_RATIO = 1e-9
HAT_RELATIVE_TOLERANCE = 1e-12
SUBADDITIVE_TOLERANCE = 1e-9
SUBADDITIVE_SAMPLES = 10_000

# Holder maps / curves
HILBERT_MAX_ORDER = 20
MIN_MODULUS_PAIRS = 10
MODULUS_BINS = 24
# |t−s| の標本範囲: 上端と、最細格子から除く次数の数
CURVE_MODULUS_TOP = 0.25
CURVE_MODULUS_SKIP = 1

# Self-similar sets
MAX_ATTRACTOR_POINTS = 10 ** 7
MORAN_XTOL = 1e-13
SIMILARITY_TOLERANCE = 1e-12

# Pipeline defaults
PIPELINE_EPSILON = "1/10"
PIPELINE_DEPTH = 10
PIPELINE_N_MAX = 6
PIPELINE_HAT_BETA = 0.9
PIPELINE_MAX_PAIRS = 200_000
PIPELINE_DENSITY_LEVELS = 12

# Output
OUTPUT_DIR = "data/output"
OUTPUT_ENV = "METRIFRACT_OUT"
FLOAT_FORMAT = "%.17g"
DEFAULT_THREADS = 1

# Logging
LOG_FILE = "metrifract.log"
LOG_FORMAT = "%(asctime)s [%(levelname)s] %(message)s"
LOG_LEVEL = "INFO"
