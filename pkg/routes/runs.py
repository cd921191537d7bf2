import logging

from flask import Blueprint, request
from pydantic import ValidationError

from config import Config
from models.run import RunConfig
from services.record_service import RunRecordService
from services.runner import run_single
from utils.errors import RecordStoreUnavailable
from utils.helpers import serialize_doc, validate_config_hash, create_error_response, create_success_response

runs_bp = Blueprint('runs', __name__)


def get_record_service():
    return RunRecordService()


def _optional(name, cast):
    value = request.args.get(name)
    return cast(value) if value not in (None, "") else None


@runs_bp.route('/runs', methods=['POST'])
def create_run():
    """
    Execute a run and store its record
    ---
    tags:
      - Runs
    parameters:
      - in: body
        name: config
        description: Run configuration; omitted fields take the configured defaults
        required: true
        schema:
          type: object
          properties:
            system:
              type: object
              properties:
                dimension:
                  type: integer
                  enum: [1, 2]
                  example: 1
                coupling:
                  type: number
                  example: 1.0
                symmetry:
                  type: string
                  enum: ["symmetric", "antisymmetric"]
                softening:
                  type: number
                  example: 0.0
            solver:
              type: object
              properties:
                method:
                  type: string
                  enum: ["grid", "basis"]
                basis_size:
                  type: integer
                  example: 120
            protocol:
              type: object
              properties:
                kind:
                  type: string
                  enum: ["switch_off", "modulation"]
            duration:
              type: number
              example: 200
    responses:
      201:
        description: Run finished and recorded
      400:
        description: Invalid configuration
      422:
        description: Run failed; the record lists the stage
    """
    try:
        data = request.get_json(silent=True)
        if not data:
            return create_error_response("Request body is required")

        config = RunConfig.model_validate(data)
        store = get_record_service() if Config.RECORD_STORE_ENABLED else None
        record = run_single(config, store)

        if record.status != "completed":
            return create_error_response(f"Run failed during {record.stage}: {record.error}", 422)
        return create_success_response(record.model_dump(mode="json"), "Run completed", 201)

    except ValidationError as e:
        return create_error_response(f"Validation error: {e}")
    except RecordStoreUnavailable as e:
        return create_error_response(str(e), 503)
    except Exception as e:
        logging.error(f"Run request failed: {e}")
        return create_error_response(f"Internal server error: {str(e)}", 500)


@runs_bp.route('/runs', methods=['GET'])
def get_runs():
    """
    List run records with optional filtering
    ---
    tags:
      - Runs
    parameters:
      - in: query
        name: dimension
        type: integer
        enum: [1, 2]
      - in: query
        name: symmetry
        type: string
        enum: ["symmetric", "antisymmetric"]
      - in: query
        name: status
        type: string
        enum: ["completed", "failed"]
      - in: query
        name: coupling_min
        type: number
      - in: query
        name: coupling_max
        type: number
      - in: query
        name: page
        type: integer
        default: 1
      - in: query
        name: limit
        type: integer
        default: 20
    responses:
      200:
        description: Page of run records
      503:
        description: Record store not connected
    """
    try:
        dimension = _optional('dimension', int)
        coupling_min = _optional('coupling_min', float)
        coupling_max = _optional('coupling_max', float)
        page = int(request.args.get('page', 1))
        limit = int(request.args.get('limit', Config.ITEMS_PER_PAGE))

        if page < 1:
            page = 1
        if limit < 1 or limit > 100:
            limit = Config.ITEMS_PER_PAGE

        result = get_record_service().get_records(dimension, request.args.get('symmetry'),
                                                  request.args.get('status'), coupling_min, coupling_max,
                                                  page, limit)
        result['records'] = serialize_doc(result['records'])

        return create_success_response(result)

    except RecordStoreUnavailable as e:
        return create_error_response(str(e), 503)
    except ValueError as e:
        return create_error_response(f"Invalid parameter: {e}")
    except Exception as e:
        return create_error_response(f"Internal server error: {str(e)}", 500)


@runs_bp.route('/runs/stats', methods=['GET'])
def get_run_stats():
    """
    Run-record statistics
    ---
    tags:
      - Runs
    responses:
      200:
        description: Counts per status and coupling coverage per system
      503:
        description: Record store not connected
    """
    try:
        return create_success_response(serialize_doc(get_record_service().get_record_stats()))

    except RecordStoreUnavailable as e:
        return create_error_response(str(e), 503)
    except Exception as e:
        return create_error_response(f"Internal server error: {str(e)}", 500)


@runs_bp.route('/runs/<config_hash>', methods=['GET'])
def get_run(config_hash):
    """
    Get a run record by configuration hash
    ---
    tags:
      - Runs
    parameters:
      - in: path
        name: config_hash
        type: string
        required: true
    responses:
      200:
        description: Run record
      404:
        description: Run not found
    """
    try:
        if not validate_config_hash(config_hash):
            return create_error_response("Invalid config hash")

        record = get_record_service().get_record(config_hash)
        if not record:
            return create_error_response("Run not found", 404)

        return create_success_response(serialize_doc(record))

    except RecordStoreUnavailable as e:
        return create_error_response(str(e), 503)
    except Exception as e:
        return create_error_response(f"Internal server error: {str(e)}", 500)


@runs_bp.route('/runs/<config_hash>', methods=['DELETE'])
def delete_run(config_hash):
    """
    Soft delete a run record
    ---
    tags:
      - Runs
    parameters:
      - in: path
        name: config_hash
        type: string
        required: true
    responses:
      200:
        description: Run deleted
      404:
        description: Run not found
    """
    try:
        if not validate_config_hash(config_hash):
            return create_error_response("Invalid config hash")

        if not get_record_service().delete_record(config_hash):
            return create_error_response("Run not found", 404)

        return create_success_response({"deleted": True}, "Run deleted successfully")

    except RecordStoreUnavailable as e:
        return create_error_response(str(e), 503)
    except Exception as e:
        return create_error_response(f"Internal server error: {str(e)}", 500)
