#pragma once

#include "hmmcredit/error.hpp"
#include "hmmcredit/mat2.hpp"
#include "hmmcredit/chain.hpp"
#include "hmmcredit/model.hpp"
#include "hmmcredit/filter.hpp"
#include "hmmcredit/quadrature.hpp"
#include "hmmcredit/random.hpp"
#include "hmmcredit/mc.hpp"
#include "hmmcredit/dist.hpp"
#include "hmmcredit/pricing.hpp"
