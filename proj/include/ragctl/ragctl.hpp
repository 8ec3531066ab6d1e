#pragma once

#include "ragctl/error.hpp"
#include "ragctl/text.hpp"
#include "ragctl/control_grammar.hpp"
#include "ragctl/retrieval_index.hpp"
#include "ragctl/metrics.hpp"
#include "ragctl/generator.hpp"
#include "ragctl/chat_backend.hpp"
#include "ragctl/planner.hpp"
#include "ragctl/supervision.hpp"
#include "ragctl/reward.hpp"
#include "ragctl/records.hpp"
#include "ragctl/report.hpp"
#include "ragctl/harness.hpp"
