#pragma once

#include "groupcal/audit.hpp"
#include "groupcal/binning.hpp"
#include "groupcal/confidence_scoring.hpp"
#include "groupcal/config.hpp"
#include "groupcal/data_model.hpp"
#include "groupcal/error.hpp"
#include "groupcal/grouping_loss.hpp"
#include "groupcal/isotonic.hpp"
#include "groupcal/jsonl.hpp"
#include "groupcal/labeling.hpp"
#include "groupcal/partition.hpp"
#include "groupcal/random.hpp"
#include "groupcal/reconfidencer.hpp"
#include "groupcal/synthetic.hpp"
