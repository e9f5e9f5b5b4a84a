import os

from dotenv import load_dotenv

load_dotenv()

# Environment variables
OUTPUT_DIR = os.getenv("VESIM_OUTPUT_DIR", "runs")
LOG_LEVEL = os.getenv("VESIM_LOG_LEVEL", "INFO")

# Linear solver
GMRES_TOL = float(os.getenv("VESIM_GMRES_TOL", "1e-10"))
GMRES_MAX_ITER = int(os.getenv("VESIM_GMRES_MAX_ITER", "200"))

# Layer potential quadrature
UPSAMPLING_FACTOR = int(os.getenv("VESIM_UPSAMPLING", "4"))
NEAR_THRESHOLD_FACTOR = float(os.getenv("VESIM_NEAR_FACTOR", "5"))
