import os
from dotenv import load_dotenv

load_dotenv()


class Config:
    GRID_POINTS = int(os.getenv('GRID_POINTS', '1200'))
    TIME_STEP = float(os.getenv('TIME_STEP', '5e-4'))
    IMAGINARY_TIME_STEP = float(os.getenv('IMAGINARY_TIME_STEP', '0.01'))
    IMAGINARY_TIME_TOLERANCE = float(os.getenv('IMAGINARY_TIME_TOLERANCE', '1e-11'))
    IMAGINARY_TIME_MAX_STEPS = int(os.getenv('IMAGINARY_TIME_MAX_STEPS', '200000'))

    BASIS_SIZE = int(os.getenv('BASIS_SIZE', '200'))
    PAIR_BASIS_SIZE = int(os.getenv('PAIR_BASIS_SIZE', '625'))
    BASIS_TIME_STEP = float(os.getenv('BASIS_TIME_STEP', '0.02'))

    SAMPLE_INTERVAL = float(os.getenv('SAMPLE_INTERVAL', '0.05'))
    WORKERS = int(os.getenv('WORKERS', str(os.cpu_count() or 1)))

    OUTPUT_DIR = os.getenv('OUTPUT_DIR', 'runs')
    MATRIX_CACHE_DIR = os.getenv('MATRIX_CACHE_DIR', os.path.join(OUTPUT_DIR, 'matrix_cache'))

    LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')

    RECORD_STORE_ENABLED = os.getenv('RECORD_STORE_ENABLED', 'False').lower() == 'true'
    MONGODB_URI = os.getenv('MONGODB_URI', 'mongodb://localhost:27017/')
    MONGODB_DB = os.getenv('MONGODB_DB', 'breathing_modes')

    SECRET_KEY = os.getenv('SECRET_KEY', 'your-secret-key')
    DEBUG = os.getenv('FLASK_DEBUG', 'True').lower() == 'true'

    ITEMS_PER_PAGE = int(os.getenv('ITEMS_PER_PAGE', '20'))
