from datetime import datetime
from typing import Any, Dict, Optional

from pymongo import ReturnDocument

from models.run import RunRecord
from utils.database import get_db
from utils.errors import RecordStoreUnavailable


class RunRecordService:
    def __init__(self):
        self.db = get_db()
        if self.db is None:
            raise RecordStoreUnavailable("Run-record store is not connected")
        self.collection = self.db.run_records

    @staticmethod
    def _document(record: RunRecord) -> Dict[str, Any]:
        doc = record.model_dump(mode="json", exclude={"created_at"})
        system = record.config.system
        # flattened copies of the fields the listing filters on
        doc.update({
            "dimension": system.dimension,
            "symmetry": system.symmetry.value,
            "coupling": system.coupling,
            "softening": system.softening,
            "method": record.config.solver.method.value,
            "protocol": record.config.protocol.kind,
            "relative_frequency": record.report.relative_frequency if record.report else None,
            "com_frequency": record.report.com_frequency if record.report else None,
        })
        return doc

    def upsert_record(self, record: RunRecord) -> Dict[str, Any]:
        """Store a run record; a rerun of the same configuration replaces it"""
        now = datetime.utcnow()
        doc = self._document(record)
        doc["updated_at"] = now
        doc["is_deleted"] = False

        return self.collection.find_one_and_update(
            {"config_hash": record.config_hash},
            {"$set": doc, "$setOnInsert": {"created_at": record.created_at}},
            upsert=True,
            return_document=ReturnDocument.AFTER
        )

    def get_records(self, dimension: Optional[int] = None, symmetry: Optional[str] = None,
                    status: Optional[str] = None, coupling_min: Optional[float] = None,
                    coupling_max: Optional[float] = None, page: int = 1, limit: int = 20) -> Dict[str, Any]:
        """Get run records with optional filtering and pagination"""
        query: Dict[str, Any] = {"is_deleted": False}

        if dimension is not None:
            query["dimension"] = dimension
        if symmetry:
            query["symmetry"] = symmetry
        if status:
            query["status"] = status
        if coupling_min is not None or coupling_max is not None:
            query["coupling"] = {}
            if coupling_min is not None:
                query["coupling"]["$gte"] = coupling_min
            if coupling_max is not None:
                query["coupling"]["$lte"] = coupling_max

        skip = (page - 1) * limit
        total = self.collection.count_documents(query)

        records = list(
            self.collection.find(query)
            .sort([("dimension", 1), ("symmetry", 1), ("coupling", 1)])
            .skip(skip)
            .limit(limit)
        )

        return {
            "records": records,
            "total": total,
            "page": page,
            "limit": limit,
            "total_pages": (total + limit - 1) // limit
        }

    def get_record(self, config_hash: str) -> Optional[Dict[str, Any]]:
        return self.collection.find_one({"config_hash": config_hash, "is_deleted": False})

    def delete_record(self, config_hash: str) -> bool:
        """Soft delete a run record"""
        result = self.collection.update_one(
            {"config_hash": config_hash, "is_deleted": False},
            {"$set": {"is_deleted": True, "updated_at": datetime.utcnow()}}
        )
        return result.modified_count > 0

    def get_record_stats(self) -> Dict[str, Any]:
        """Counts per status and coupling coverage per system"""
        total_records = self.collection.count_documents({"is_deleted": False})

        pipeline = [
            {"$match": {"is_deleted": False}},
            {"$group": {"_id": "$status", "count": {"$sum": 1}}},
            {"$sort": {"count": -1}}
        ]
        by_status = list(self.collection.aggregate(pipeline))

        pipeline = [
            {"$match": {"is_deleted": False, "status": "completed"}},
            {"$group": {
                "_id": {"dimension": "$dimension", "symmetry": "$symmetry"},
                "count": {"$sum": 1},
                "min_coupling": {"$min": "$coupling"},
                "max_coupling": {"$max": "$coupling"},
                "min_relative_frequency": {"$min": "$relative_frequency"},
            }},
            {"$sort": {"_id.dimension": 1, "_id.symmetry": 1}}
        ]
        by_system = list(self.collection.aggregate(pipeline))

        return {
            "total_records": total_records,
            "by_status": by_status,
            "by_system": by_system
        }
