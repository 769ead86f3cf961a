#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "riskplan/distribution.hpp"

namespace riskplan {

struct Bounds {
    double xmin = -1.0, xmax = 1.0;
    double ymin = -1.0, ymax = 1.0;

    bool contains(const Point& p) const {
        return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
    }
    double width() const { return xmax - xmin; }
    double height() const { return ymax - ymin; }
    double diagonal() const { return std::hypot(width(), height()); }

    friend bool operator==(const Bounds&, const Bounds&) = default;
};

struct Environment {
    Bounds bounds;
    std::vector<UncertainObstacle> obstacles;

    void validate() const {
        if (!(bounds.xmin < bounds.xmax) || !(bounds.ymin < bounds.ymax))
            throw std::invalid_argument("environment bounds are degenerate");
        for (size_t i = 0; i < obstacles.size(); ++i)
            for (size_t j = i + 1; j < obstacles.size(); ++j)
                if (obstacles[i].name == obstacles[j].name)
                    throw std::invalid_argument("duplicate obstacle name: " + obstacles[i].name);
    }

    Point sample_point(Rng& rng) const {
        return {uniform_double(rng, bounds.xmin, bounds.xmax),
                uniform_double(rng, bounds.ymin, bounds.ymax)};
    }
};

}  // namespace riskplan
