// sums values
class Sum {
    static int run(int[] v) {
        int total = 0;
        for (int i = 0; i < v.length; i++) {
            total += v[i]; /* accumulate */
        }
        return total;
    }
}
