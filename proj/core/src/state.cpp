#include "wildflow/state.hpp"

#include <algorithm>
#include <stdexcept>

namespace wf {

double EnergyProfile::value(double t) const {
    switch (form) {
        case Form::constant:
            return a0;
        case Form::linear:
            return a0 + a1 * t;
        case Form::table: {
            if (tab_t.empty())
                throw std::runtime_error("EnergyProfile: empty table");
            if (t <= tab_t.front()) return tab_e.front();
            if (t >= tab_t.back()) return tab_e.back();
            const auto it =
                std::upper_bound(tab_t.begin(), tab_t.end(), t);
            const std::size_t j = std::size_t(it - tab_t.begin());
            const double u =
                (t - tab_t[j - 1]) / (tab_t[j] - tab_t[j - 1]);
            return (1.0 - u) * tab_e[j - 1] + u * tab_e[j];
        }
    }
    throw std::runtime_error("EnergyProfile: bad form");
}

double EnergyProfile::deriv(double t) const {
    switch (form) {
        case Form::constant:
            return 0.0;
        case Form::linear:
            return a1;
        case Form::table: {
            if (tab_t.empty())
                throw std::runtime_error("EnergyProfile: empty table");
            if (t <= tab_t.front() || t >= tab_t.back()) return 0.0;
            const auto it =
                std::upper_bound(tab_t.begin(), tab_t.end(), t);
            const std::size_t j = std::size_t(it - tab_t.begin());
            return (tab_e[j] - tab_e[j - 1]) / (tab_t[j] - tab_t[j - 1]);
        }
    }
    throw std::runtime_error("EnergyProfile: bad form");
}

EnergyProfile EnergyProfile::constant(double e) {
    EnergyProfile p;
    p.form = Form::constant;
    p.a0 = e;
    return p;
}

EnergyProfile EnergyProfile::linear(double e0, double slope) {
    EnergyProfile p;
    p.form = Form::linear;
    p.a0 = e0;
    p.a1 = slope;
    return p;
}

ErState init_state(const std::vector<double>& times,
                   const std::vector<Field>& z0, const EnergyProfile& E) {
    if (times.size() != z0.size() || times.empty())
        throw std::runtime_error("init_state: times and z0 sizes differ");
    ErState st;
    st.q = 0;
    st.grid = z0.front().grid;
    st.times = times;
    st.E = E;
    const std::size_t np = st.grid.points();
    for (std::size_t j = 0; j < times.size(); ++j) {
        const Field& z = z0[j];
        if (z.grid != st.grid || z.rank != Rank::vector3)
            throw std::runtime_error("init_state: z0 layout mismatch");
        const double e = E.value(times[j]);

        st.v.emplace_back(st.grid, Rank::vector3);

        Field zz = dot(z, z);
        Field p(st.grid, Rank::scalar);
        double zz_mean = 0.0;
        for (std::size_t i = 0; i < np; ++i) zz_mean += zz.a[i];
        zz_mean /= double(np);
        // p = -|z|^2/3, shifted so that the mean of p is mean(|z|^2)/3
        for (std::size_t i = 0; i < np; ++i)
            p.a[i] = (2.0 * zz_mean - zz.a[i]) / 3.0;
        st.p.push_back(std::move(p));

        Field R = ring_outer_self(z);
        add_id_times(R, 2.0 * e / 3.0);
        st.R.push_back(std::move(R));

        Field phi = pointwise_mul(zz, z);
        phi *= -0.5;
        st.phi.push_back(std::move(phi));

        st.z.push_back(z);
    }
    return st;
}

}  // namespace wf
