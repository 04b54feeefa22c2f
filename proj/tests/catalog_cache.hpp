#pragma once

#include <map>
#include <mutex>
#include <string>

#include "shrinker_lab/catalog.hpp"

// Build each catalog network once per test binary.
inline const shrinker_lab::ShrinkerNetwork &cached(const std::string &name, std::size_t samples = 2048) {
    static std::map<std::pair<std::string, std::size_t>, shrinker_lab::ShrinkerNetwork> cache;
    static std::mutex mu;
    std::lock_guard lock(mu);
    auto key = std::make_pair(name, samples);
    auto it = cache.find(key);
    if (it == cache.end()) {
        shrinker_lab::CatalogOptions opt;
        opt.samples = samples;
        it = cache.emplace(key, shrinker_lab::build_catalog_shrinker(name, opt)).first;
    }
    return it->second;
}
