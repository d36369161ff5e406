class Deep {
    void walk(int n) {
        while (n > 0) {
            switch (n % 2) {
                case 0:
                    n--;
                    break;
                default:
                    try {
                        n = n / 2;
                    } catch (Exception e) {
                        throw e;
                    }
            }
        }
    }
}
