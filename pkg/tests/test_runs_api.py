import json
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from app import create_app
from config import Config
from services.oscillator_basis import set_matrix_cache
from utils.database import close_db, get_db, init_db
from utils.storage import MatrixCache


@pytest.fixture
def app():
    """Create and configure a test app"""
    app = create_app()
    app.config['TESTING'] = True
    return app


@pytest.fixture
def client(app):
    """Create a test client"""
    return app.test_client()


@pytest.fixture(autouse=True)
def matrix_cache(tmp_path):
    set_matrix_cache(MatrixCache(str(tmp_path / "matrix_cache")))


@pytest.fixture
def record_store(monkeypatch):
    """Connected run-record store; skips when MongoDB is not reachable"""
    try:
        init_db()
    except Exception:
        pytest.skip("MongoDB is not reachable")
    monkeypatch.setattr(Config, 'RECORD_STORE_ENABLED', True)
    get_db().run_records.drop()
    yield get_db()
    get_db().run_records.drop()
    close_db()


@pytest.fixture
def sample_run(tmp_path):
    """Short kick run of the ideal pair in a small basis"""
    return {
        "system": {"dimension": 1, "coupling": 0.0, "symmetry": "antisymmetric"},
        "solver": {"method": "basis", "basis_size": 20, "time_step": 0.05},
        "duration": 30.0,
        "sample_interval": 0.05,
        "output_dir": str(tmp_path / "runs"),
        "workers": 1
    }


class TestRunsWithoutStore:
    def test_create_run_success(self, client, sample_run):
        """Test that a run executes without a record store"""
        response = client.post('/runs', data=json.dumps(sample_run), content_type='application/json')

        assert response.status_code == 201
        data = json.loads(response.data)
        assert data['message'] == 'Run completed'
        assert data['data']['status'] == 'completed'
        assert data['data']['report']['relative_frequency'] == pytest.approx(2.0, abs=1e-3)
        assert len(data['data']['config_hash']) == 16

    def test_create_run_invalid_config(self, client, sample_run):
        """Test run creation with an invalid coupling"""
        sample_run['system']['coupling'] = -1.0
        response = client.post('/runs', data=json.dumps(sample_run), content_type='application/json')

        assert response.status_code == 400
        assert 'Validation error' in json.loads(response.data)['error']

    def test_create_run_empty_body(self, client):
        """Test run creation without a body"""
        response = client.post('/runs', data='', content_type='application/json')
        assert response.status_code == 400

    def test_failed_run_is_unprocessable(self, client, sample_run):
        """Test 422 when the solver cannot be set up"""
        sample_run['solver']['representation'] = 'pair'
        sample_run['solver']['basis_size'] = 24
        response = client.post('/runs', data=json.dumps(sample_run), content_type='application/json')

        assert response.status_code == 422
        assert 'Run failed during setup' in json.loads(response.data)['error']

    def test_catalog_unavailable(self, client):
        """Test 503 from the catalog routes without a store"""
        assert client.get('/runs').status_code == 503
        assert client.get('/runs/stats').status_code == 503
        assert client.get('/runs/0123456789abcdef').status_code == 503

    def test_invalid_hash(self, client):
        """Test that malformed hashes are rejected before the store is asked"""
        response = client.get('/runs/not-a-hash')
        assert response.status_code == 400
        assert json.loads(response.data)['error'] == 'Invalid config hash'


class TestRunCatalog:
    def test_run_is_stored(self, client, record_store, sample_run):
        """Test that a finished run appears in the catalog"""
        created = json.loads(client.post('/runs', data=json.dumps(sample_run),
                                         content_type='application/json').data)
        config_hash = created['data']['config_hash']

        response = client.get(f'/runs/{config_hash}')
        assert response.status_code == 200
        data = json.loads(response.data)
        assert data['data']['config_hash'] == config_hash
        assert data['data']['coupling'] == 0.0
        assert 'is_deleted' not in data['data']

    def test_rerun_replaces_record(self, client, record_store, sample_run):
        """Test that the same configuration is stored once"""
        for _ in range(2):
            client.post('/runs', data=json.dumps(sample_run), content_type='application/json')
        data = json.loads(client.get('/runs').data)
        assert data['data']['total'] == 1

    def test_list_filters_and_pagination(self, client, record_store, sample_run):
        """Test coupling filters and the pagination fields"""
        for coupling in (0.0, 0.5):
            sample_run['system'].update({"coupling": coupling, "softening": 1.0})
            client.post('/runs', data=json.dumps(sample_run), content_type='application/json')

        data = json.loads(client.get('/runs?coupling_min=0.1').data)['data']
        assert data['total'] == 1
        assert data['records'][0]['coupling'] == 0.5

        data = json.loads(client.get('/runs?page=1&limit=1').data)['data']
        assert data['total'] == 2
        assert data['total_pages'] == 2
        assert len(data['records']) == 1

    def test_stats(self, client, record_store, sample_run):
        """Test counts per status and per system"""
        client.post('/runs', data=json.dumps(sample_run), content_type='application/json')
        data = json.loads(client.get('/runs/stats').data)['data']
        assert data['total_records'] == 1
        assert data['by_status'][0]['count'] == 1
        assert data['by_system'][0]['min_coupling'] == 0.0

    def test_delete_run(self, client, record_store, sample_run):
        """Test soft deletion"""
        created = json.loads(client.post('/runs', data=json.dumps(sample_run),
                                         content_type='application/json').data)
        config_hash = created['data']['config_hash']

        response = client.delete(f'/runs/{config_hash}')
        assert response.status_code == 200
        assert client.get(f'/runs/{config_hash}').status_code == 404
        assert client.delete(f'/runs/{config_hash}').status_code == 404
