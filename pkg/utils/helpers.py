import logging
import re
from datetime import datetime

import numpy as np
from bson import ObjectId
from flask import jsonify

from config import Config

CONFIG_HASH_PATTERN = re.compile(r"^[0-9a-f]{16}$")


def serialize_doc(doc):
    """Convert stored documents and numpy results to JSON-serializable values"""
    if doc is None:
        return None

    if isinstance(doc, (list, tuple)):
        return [serialize_doc(item) for item in doc]

    if isinstance(doc, dict):
        serialized = {}
        for key, value in doc.items():
            if key == '_id':
                serialized['id'] = str(value)
            elif key == 'is_deleted':
                continue
            else:
                serialized[key] = serialize_doc(value)
        return serialized

    if isinstance(doc, ObjectId):
        return str(doc)
    if isinstance(doc, datetime):
        return doc.isoformat()
    if isinstance(doc, np.ndarray):
        return doc.tolist()
    if isinstance(doc, np.generic):
        return doc.item()
    return doc


def validate_config_hash(value):
    """Config hashes are 16 lowercase hex digits"""
    return bool(CONFIG_HASH_PATTERN.match(value or ""))


def create_error_response(message, status_code=400):
    """Create standardized error response"""
    return jsonify({"error": message}), status_code


def create_success_response(data, message=None, status_code=200):
    """Create standardized success response"""
    response = {"data": data}
    if message:
        response["message"] = message
    return jsonify(response), status_code


def configure_logging(level=None):
    """Root logger setup shared by the CLI and the HTTP app"""
    logging.basicConfig(level=getattr(logging, (level or Config.LOG_LEVEL).upper(), logging.INFO),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
