#ifndef FEMOPT_POINT_HPP
#define FEMOPT_POINT_HPP

namespace femopt {

/// A point of the unit interval or unit square. In 1D `y` is unused and zero.
struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

} // namespace femopt

#endif
