"""Built-in agronomy constellation schema: 4 fact tables, 19 dimension tables.

Attribute lists follow the published dimension descriptions; names are
normalised to lower_snake_case. Measures and hierarchies are this project's
additions: stored measures are additive (or counts) so every pre-aggregation
stays summable, and ratios are derived at result assembly.
"""

from .model import (
    AttributeDef,
    ConstellationSchema,
    DimensionDef,
    FactDef,
    HierarchyDef,
    LinkDef,
    MeasureDef,
)


def _attr(name: str, kind: str = "text", nullable: bool = True) -> AttributeDef:
    return AttributeDef(name, kind, nullable)


def _id(name: str) -> AttributeDef:
    return AttributeDef(name, "identifier", nullable=False)


def _contact_block() -> list[AttributeDef]:
    return [
        _attr("address"),
        _attr("contact_person"),
        _attr("contact_phone"),
        _attr("contact_mobile"),
        _attr("contact_email"),
    ]


def builtin_schema() -> ConstellationSchema:
    """The shipped agronomy schema; validates with zero findings."""
    dims = [
        DimensionDef(
            "Business", "business_id",
            [_id("business_id"),
             _attr("business_name", nullable=False),
             _attr("original_name"),
             _attr("address"),
             _attr("contact_phone"),
             _attr("contact_mobile"),
             _attr("contact_email")],
        ),
        DimensionDef(
            "Crop", "crop_id",
            [_id("crop_id"),
             _attr("name", nullable=False),
             _attr("code", nullable=False),
             _attr("variety_name", nullable=False),
             _attr("variety_description"),
             _attr("standard_moisture_percentage", "decimal"),
             _attr("estimated_yield", "decimal")],
            hierarchies=[HierarchyDef("variety", ["variety_name", "name"])],
        ),
        DimensionDef(
            "Disease", "disease_id",
            [_id("disease_id"),
             _attr("name", nullable=False),
             _attr("type", nullable=False),
             _attr("features_on_crop"),
             _attr("description"),
             _attr("measure")],
            hierarchies=[HierarchyDef("classification", ["name", "type"])],
        ),
        DimensionDef(
            "Drilling", "drilling_id",
            [_id("drilling_id"),
             _attr("method", nullable=False),
             _attr("machine"),
             _attr("description"),
             _attr("date", "date")],
        ),
        DimensionDef(
            "Farmer", "farmer_id",
            [_id("farmer_id"),
             _attr("name", nullable=False),
             _attr("sex", "enumeration"),
             _attr("birth_year", "integer"),
             _attr("address"),
             _attr("field_area", "decimal"),
             _attr("phone"),
             _attr("email"),
             _attr("experiences"),
             _attr("skills")],
        ),
        DimensionDef(
            "Field", "field_id",
            [_id("field_id"),
             _attr("station_id", "identifier"),
             _attr("farmer_id", "identifier"),
             _attr("name", nullable=False),
             _attr("block", nullable=False),
             _attr("area", "decimal"),
             _attr("working_area", "decimal")],
            links=[LinkDef("farmer_id", "Farmer"),
                   LinkDef("station_id", "Weather_Station")],
            hierarchies=[HierarchyDef("layout", ["name", "block"])],
        ),
        DimensionDef(
            "Fertiliser", "fertilizer_id",
            [_id("fertilizer_id"),
             _attr("fertiliser_nutrient", nullable=False),
             _attr("product_name"),
             _attr("application_area", "decimal"),
             _attr("quantity", "decimal"),
             _attr("stock_date", "date")],
        ),
        DimensionDef(
            "Inspection", "inspection_id",
            [_id("inspection_id"),
             _attr("description"),
             _attr("problem_type", nullable=False),
             _attr("severity"),
             _attr("date", "date"),
             _attr("growth_stage")],
        ),
        DimensionDef(
            "Maintenance", "maintenance_id",
            [_id("maintenance_id"),
             _attr("rate", "decimal"),
             _attr("description"),
             _attr("date", "date")],
        ),
        DimensionDef(
            "Order", "order_id",
            [_id("order_id"),
             _attr("order_date", "date", nullable=False),
             _attr("transaction_date", "date"),
             _attr("value", "decimal"),
             _attr("comment"),
             _attr("reference")],
            hierarchies=[HierarchyDef(
                "order_time",
                ["order_date", "month(order_date)", "year(order_date)"])],
        ),
        DimensionDef(
            "Pest", "pest_id",
            [_id("pest_id"),
             _attr("common_name", nullable=False),
             _attr("scientific_name"),
             _attr("type", nullable=False),
             _attr("description"),
             _attr("density", "decimal"),
             _attr("coverage", "decimal")],
            hierarchies=[HierarchyDef("taxonomy", ["common_name", "type"])],
        ),
        DimensionDef(
            "Planning", "planning_id",
            [_id("planning_id"),
             _attr("name", nullable=False),
             _attr("plan_number", "integer"),
             _attr("product_name"),
             _attr("product_rate", "decimal"),
             _attr("date", "date"),
             _attr("water_volume", "decimal"),
             _attr("notes")],
        ),
        DimensionDef(
            "Plow", "plow_id",
            [_id("plow_id"),
             _attr("tillage_method", nullable=False),
             _attr("plowing_depth", "decimal"),
             _attr("machine"),
             _attr("date", "date")],
        ),
        DimensionDef(
            "Product", "product_id",
            [_id("product_id"),
             _attr("product_name", nullable=False),
             _attr("group_name", nullable=False),
             _attr("type_name", nullable=False),
             _attr("date_of_manufacture", "date"),
             _attr("business_id", "identifier")],
            links=[LinkDef("business_id", "Business")],
            hierarchies=[HierarchyDef(
                "product_line", ["product_name", "group_name", "type_name"])],
        ),
        DimensionDef(
            "Purchaser", "purchaser_id",
            [_id("purchaser_id"), _attr("name", nullable=False)] + _contact_block(),
        ),
        DimensionDef(
            "Soil", "soil_id",
            [_id("soil_id"),
             _attr("field_id", "identifier"),
             _attr("mineral_particles"),
             _attr("organic_matter", "decimal"),
             _attr("colour"),
             _attr("ph_value", "decimal")],
            links=[LinkDef("field_id", "Field")],
        ),
        DimensionDef(
            "Supplier", "supplier_id",
            [_id("supplier_id"), _attr("name", nullable=False)] + _contact_block(),
        ),
        DimensionDef(
            "Water_Utilization", "water_utili_id",
            [_id("water_utili_id"),
             _attr("amount", "decimal"),
             _attr("source", nullable=False),
             _attr("method"),
             _attr("date", "date")],
        ),
        DimensionDef(
            "Weather_Station", "station_id",
            [_id("station_id"),
             _attr("station_name", nullable=False),
             _attr("station_batch"),
             _attr("measure_date", "date"),
             _attr("air_temperature", "decimal"),
             _attr("soil_temperature", "decimal")],
        ),
    ]

    facts = [
        FactDef(
            "Trading",
            ["Product", "Order", "Supplier", "Purchaser"],
            [MeasureDef("quantity_t", "additive", unit="t"),
             MeasureDef("total_value_eur", "additive", unit="eur"),
             MeasureDef("row_count", "count"),
             MeasureDef("unit_price_eur", "ratio",
                        numerator="total_value_eur", denominator="quantity_t",
                        unit="eur/t")],
        ),
        FactDef(
            "Operation",
            ["Product", "Crop", "Field", "Farmer", "Soil", "Fertiliser",
             "Plow", "Drilling", "Water_Utilization", "Inspection"],
            [MeasureDef("cost_eur", "additive", unit="eur"),
             MeasureDef("quantity_applied", "additive"),
             MeasureDef("row_count", "count")],
        ),
        FactDef(
            "Treatment",
            ["Planning", "Disease", "Product", "Crop", "Field", "Farmer",
             "Maintenance", "Pest"],
            [MeasureDef("dose_amount", "additive"),
             MeasureDef("cost_eur", "additive", unit="eur"),
             MeasureDef("row_count", "count")],
        ),
        FactDef(
            "Yield",
            ["Crop", "Field", "Farmer"],
            [MeasureDef("quantity_t", "additive", unit="t"),
             MeasureDef("area_ha", "additive", unit="ha"),
             MeasureDef("row_count", "count"),
             MeasureDef("yield_t_per_ha", "ratio",
                        numerator="quantity_t", denominator="area_ha",
                        unit="t/ha")],
        ),
    ]

    return ConstellationSchema(
        name="agronomy",
        dimensions={d.name: d for d in dims},
        facts={f.name: f for f in facts},
    )
