#ifndef HTMETA_HTMETA_HPP
#define HTMETA_HTMETA_HPP

#include "htmeta/analysis.hpp"
#include "htmeta/common.hpp"
#include "htmeta/config.hpp"
#include "htmeta/dynamics.hpp"
#include "htmeta/geometry.hpp"
#include "htmeta/landscape.hpp"
#include "htmeta/limit_chain.hpp"
#include "htmeta/noise.hpp"
#include "htmeta/optimizer.hpp"
#include "htmeta/rng.hpp"

#endif
