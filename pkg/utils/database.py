from pymongo import ASCENDING, MongoClient
from config import Config
import logging

client = None
db = None


def init_db():
    """Connect the run-record catalog"""
    global client, db
    try:
        client = MongoClient(Config.MONGODB_URI, serverSelectionTimeoutMS=2000)
        db = client[Config.MONGODB_DB]

        client.admin.command('ping')
        logging.info(f"Connected to run-record store {Config.MONGODB_DB}")

        create_indexes()

    except Exception as e:
        logging.error(f"Failed to connect to MongoDB: {e}")
        client, db = None, None
        raise


def create_indexes():
    """Indexes for the record lookups and listing filters"""
    if db is None:
        logging.error("Database not initialized")
        return

    try:
        db.run_records.create_index("config_hash", unique=True)
        db.run_records.create_index([("dimension", ASCENDING), ("symmetry", ASCENDING), ("coupling", ASCENDING)])
        db.run_records.create_index("status")
        db.run_records.create_index("is_deleted")

        logging.info("Run-record indexes created")
    except Exception as e:
        logging.error(f"Failed to create indexes: {e}")


def get_db():
    """Database handle, or None when the store is not connected"""
    return db


def close_db():
    global client, db
    if client:
        client.close()
    client, db = None, None
