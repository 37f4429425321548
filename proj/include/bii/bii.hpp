#ifndef BII_BII_HPP
#define BII_BII_HPP

#include "bii/core.hpp"
#include "bii/log.hpp"
#include "bii/optim.hpp"
#include "bii/prior.hpp"
#include "bii/rng.hpp"
#include "bii/special.hpp"

#include "bii/models/bernoulli.hpp"
#include "bii/models/gandk.hpp"
#include "bii/models/generative.hpp"
#include "bii/models/macroparasite.hpp"
#include "bii/models/mjp_oracle.hpp"
#include "bii/models/poisson.hpp"

#include "bii/auxiliary/auxiliary.hpp"
#include "bii/auxiliary/beta_binomial.hpp"
#include "bii/auxiliary/mixture.hpp"
#include "bii/auxiliary/normal.hpp"

#include "bii/abc/discrepancy.hpp"
#include "bii/bil/npdbil.hpp"
#include "bii/bil/pdbil.hpp"
#include "bii/bil/psbil.hpp"

#include "bii/mcmc/chain.hpp"
#include "bii/mcmc/diagnostics.hpp"
#include "bii/mcmc/proposal.hpp"
#include "bii/mcmc/sampler.hpp"
#include "bii/mcmc/tuning.hpp"

#include "bii/post/regression.hpp"
#include "bii/post/summary.hpp"

#endif  // BII_BII_HPP
