import logging

from flask import Flask
from flask_cors import CORS
from flasgger import Swagger
from config import Config
from routes.frequencies import frequencies_bp
from routes.runs import runs_bp
from utils.database import init_db
from utils.helpers import configure_logging


def create_app():
    configure_logging()
    app = Flask(__name__)
    app.config.from_object(Config)

    if Config.RECORD_STORE_ENABLED:
        try:
            init_db()
        except Exception:
            logging.warning("Run-record store unavailable; /runs catalog routes will answer 503")

    CORS(app)

    Swagger(app, template={
        "swagger": "2.0",
        "info": {
            "title": "Breathing Modes API",
            "description": "Run catalog and breathing-frequency evaluations for two interacting particles "
                           "in a harmonic trap",
            "version": "1.0.0"
        },
        "basePath": "/",
        "schemes": ["http"]
    })

    app.register_blueprint(runs_bp)
    app.register_blueprint(frequencies_bp)

    @app.route('/')
    def index():
        return {
            "message": "Breathing Modes API",
            "version": "1.0.0",
            "docs": "/apidocs",
            "record_store": Config.RECORD_STORE_ENABLED
        }

    @app.errorhandler(404)
    def not_found(error):
        return {"error": "Resource not found"}, 404

    @app.errorhandler(500)
    def internal_error(error):
        return {"error": "Internal server error"}, 500

    return app


if __name__ == '__main__':
    app = create_app()
    app.run(debug=Config.DEBUG, host='0.0.0.0', port=5000)
