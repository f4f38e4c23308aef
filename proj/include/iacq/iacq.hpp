#pragma once

#include "iacq/catalog.hpp"
#include "iacq/category.hpp"
#include "iacq/error.hpp"
#include "iacq/extractor.hpp"
#include "iacq/ingest.hpp"
#include "iacq/report.hpp"
#include "iacq/scoring.hpp"
#include "iacq/timeutil.hpp"
#include "iacq/trends.hpp"
#include "iacq/yaml_doc.hpp"
