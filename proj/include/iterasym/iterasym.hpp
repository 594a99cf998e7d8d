#ifndef ITERASYM_ITERASYM_HPP
#define ITERASYM_ITERASYM_HPP

#include <iterasym/numeric.hpp>
#include <iterasym/maps.hpp>
#include <iterasym/orbit.hpp>
#include <iterasym/series.hpp>
#include <iterasym/matching.hpp>
#include <iterasym/templates.hpp>
#include <iterasym/extract.hpp>

#endif  // ITERASYM_ITERASYM_HPP
